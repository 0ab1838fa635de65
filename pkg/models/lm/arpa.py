"""ARPA text serialization of backoff n-gram models."""

import io
import re
from pathlib import Path
from typing import Dict, List, Optional, TextIO, Union

from models.lm.ngram import NGram, NGramEntry, NGramModel
from utils.errors import MalformedArpa
from utils.logger import get_logger

logger = get_logger(__name__)

_COUNT_LINE = re.compile(r"^ngram\s+(\d+)\s*=\s*(\d+)$")
_SECTION_LINE = re.compile(r"^\\(\d+)-grams:$")


def _format(value: float) -> str:
    return f"{value:.6f}"


def format_arpa(model: NGramModel) -> str:
    """Render a model as canonical ARPA text (sorted n-grams, 6 decimals)."""
    counts = model.counts()
    lines = ["\\data\\"]
    lines.extend(f"ngram {k}={counts[k]}" for k in range(1, model.order + 1))
    lines.append("")
    for k in range(1, model.order + 1):
        lines.append(f"\\{k}-grams:")
        for ngram in model.ngrams(k):
            entry = model.entries[ngram]
            fields = [_format(entry.logprob), " ".join(ngram)]
            if entry.backoff is not None:
                fields.append(_format(entry.backoff))
            lines.append("\t".join(fields))
        lines.append("")
    lines.append("\\end\\")
    return "\n".join(lines) + "\n"


def write_arpa(model: NGramModel, sink: Union[str, Path, TextIO]) -> None:
    """
    Write a model in ARPA format.

    Args:
        model: Model to serialize
        sink: Output path or open text stream
    """
    text = format_arpa(model)
    if isinstance(sink, (str, Path)):
        Path(sink).write_text(text, encoding="utf-8", newline="\n")
        logger.info(f"Wrote {model!r} to {sink}")
    else:
        sink.write(text)


def _parse_float(field: str, line_number: int) -> float:
    try:
        return float(field)
    except ValueError:
        raise MalformedArpa(f"non-numeric field {field!r}", line_number)


def read_arpa(source: Union[str, Path, TextIO]) -> NGramModel:
    """
    Read an ARPA model.

    Args:
        source: Path or open text stream

    Returns:
        NGramModel of the highest declared order

    Raises:
        MalformedArpa: missing header or section, count mismatch or bad field,
            reported with its line number
    """
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8") as handle:
            return _parse(handle)
    return _parse(source)


def parse_arpa(text: str) -> NGramModel:
    """Parse ARPA text held in memory."""
    return _parse(io.StringIO(text))


def _parse(stream: TextIO) -> NGramModel:
    declared: Dict[int, int] = {}
    entries: Dict[NGram, NGramEntry] = {}
    seen_sections: List[int] = []
    state = "preamble"
    current: Optional[int] = None
    listed = 0
    line_number = 0

    def close_section(at_line: int) -> None:
        if current is not None and listed != declared.get(current):
            raise MalformedArpa(
                f"ngram {current}={declared.get(current)} declared but {listed} listed", at_line
            )

    for line_number, raw in enumerate(stream, start=1):
        line = raw.strip()
        if not line:
            continue

        if state == "preamble":
            if line == "\\data\\":
                state = "header"
            continue

        if state == "header":
            match = _COUNT_LINE.match(line)
            if match:
                declared[int(match.group(1))] = int(match.group(2))
                continue
            if not declared:
                raise MalformedArpa("no ngram counts after \\data\\", line_number)
            state = "body"

        if line == "\\end\\":
            close_section(line_number)
            missing = sorted(set(declared) - set(seen_sections))
            if missing:
                raise MalformedArpa(f"missing \\{missing[0]}-grams: section", line_number)
            order = max(declared)
            logger.debug(f"Read ARPA model of order {order} with {len(entries)} n-grams")
            return NGramModel(order, entries)

        section = _SECTION_LINE.match(line)
        if section:
            close_section(line_number)
            current = int(section.group(1))
            if current not in declared:
                raise MalformedArpa(f"section \\{current}-grams: has no declared count", line_number)
            seen_sections.append(current)
            listed = 0
            continue

        if current is None:
            raise MalformedArpa(f"unexpected line {line!r} outside any section", line_number)

        fields = line.split()
        if len(fields) == current + 1:
            backoff = None
        elif len(fields) == current + 2:
            backoff = _parse_float(fields[-1], line_number)
        else:
            raise MalformedArpa(f"expected {current} tokens in a {current}-gram line", line_number)
        logprob = _parse_float(fields[0], line_number)
        entries[tuple(fields[1:current + 1])] = NGramEntry(logprob, backoff)
        listed += 1

    if state == "preamble":
        raise MalformedArpa("missing \\data\\ header", line_number + 1)
    raise MalformedArpa("missing \\end\\ marker", line_number + 1)
