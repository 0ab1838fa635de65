"""Meter labels, templates and the scansion classifier."""

from models.meter.labels import CANONICAL_ORDER, METERS, MeterLabel
from models.meter.scansion import (
    ScansionResult,
    TemplateMatch,
    classify_pattern,
    classify_scansion,
    rank_templates,
    template_cost,
)
from models.meter.templates import (
    METER_FEET,
    TAFAIL,
    Foot,
    MeterTemplate,
    build_templates,
    dump_templates,
    pattern_extract,
)

__all__ = [
    "CANONICAL_ORDER",
    "METERS",
    "METER_FEET",
    "TAFAIL",
    "Foot",
    "MeterLabel",
    "MeterTemplate",
    "ScansionResult",
    "TemplateMatch",
    "build_templates",
    "classify_pattern",
    "classify_scansion",
    "dump_templates",
    "pattern_extract",
    "rank_templates",
    "template_cost",
]
