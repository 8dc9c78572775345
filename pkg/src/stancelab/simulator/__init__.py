from .biased import (
    SimulatorBackend,
    SimulatorConfig,
    expected_distribution,
    make_rng,
    simulate_batch,
    simulate_prediction,
)
