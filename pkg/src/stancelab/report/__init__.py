from .leaderboard import (
    LeaderboardRow,
    best_cells,
    parse_leaderboard_csv,
    per_entity_table,
    render_leaderboard,
    row_from_report,
)
