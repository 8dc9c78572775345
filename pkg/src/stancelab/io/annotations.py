from stancelab.errors import FieldError, ValidationError
from stancelab.io.jsonl import read_jsonl
from stancelab.schema import AnnotationSet, StanceLabel


def load_annotations(annotations_path):
    """
    Load a per-annotator stance file for agreement analysis.

    Each line is {"item_id": str, "labels": [stance, ...]}; every item must
    carry the same number of labels.

    Returns:
        AnnotationSet
    """
    items = []
    annotator_count = None
    for _, raw in read_jsonl(annotations_path):
        item_id = raw.get("item_id")
        labels = raw.get("labels")
        errors = []
        if not isinstance(item_id, str) or not item_id:
            errors.append(FieldError("item_id", "must be a nonempty string"))
        if not isinstance(labels, list) or not labels:
            errors.append(FieldError("labels", "must be a nonempty list of stance labels"))
            labels = []
        parsed = []
        for value in labels:
            try:
                parsed.append(StanceLabel(value))
            except ValueError:
                errors.append(FieldError("labels", f"'{value}' is not a stance label"))
        if annotator_count is None and parsed:
            annotator_count = len(parsed)
        if parsed and len(parsed) != annotator_count:
            errors.append(FieldError("labels", f"expected {annotator_count} annotations, found {len(parsed)}"))
        if errors:
            raise ValidationError(item_id or "<missing item_id>", errors)
        items.append((item_id, tuple(parsed)))
    return AnnotationSet(tuple(items), annotator_count or 0)
