"""Report and source ingestion.

Reads the scanner's BugCollection XML and the benchmark's expected-results
CSV, pulls the flagged lines out of the source tree, and joins everything
into a labeled dataset keyed on (file basename, category).

The labeled dataset round-trips through a versioned TSV file (header
``#sast-triage-dataset v1``) so downstream stages never re-touch the source
tree or the raw report.
"""

import csv
import hashlib
import io
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

LABEL_REAL = "REAL"
LABEL_SPURIOUS = "SPURIOUS"

CATEGORY_CODES = (
    "pathtraver",
    "hash",
    "trustbound",
    "crypto",
    "cmdi",
    "sqli",
    "weakrand",
    "ldapi",
    "xss",
    "securecookie",
    "xpathi",
)
_CATEGORY_SET = frozenset(CATEGORY_CODES)

DATASET_HEADER = "#sast-triage-dataset v1"


class IngestError(Exception):
    """Base class for ingest failures."""


class ReportParseError(IngestError):
    def __init__(self, message: str, byte_offset: int = 0):
        super().__init__(message)
        self.byte_offset = byte_offset


class GroundTruthError(IngestError):
    pass


class ExtractionError(IngestError):
    pass


class DatasetFormatError(IngestError):
    pass


@dataclass
class WarningRecord:
    source_file: str
    class_name: str
    method_name: str
    vuln_type: str
    category_code: str
    line_spans: list[tuple[int, int]]
    code_block: str = ""


@dataclass
class GroundTruthEntry:
    test_name: str
    category_code: str
    is_real: bool
    cwe: int


@dataclass
class LabeledSample:
    warning: WarningRecord
    label: str
    tokens: list[str] | None = None
    features: object | None = None  # FeatureVector, filled by the embed stage


@dataclass
class SkippedInstance:
    index: int
    vuln_type: str | None
    reason: str


@dataclass
class ReportParseResult:
    records: list[WarningRecord]
    skipped: list[SkippedInstance]

    @property
    def instance_count(self) -> int:
        return len(self.records) + len(self.skipped)


@dataclass
class JoinReport:
    matched: int = 0
    unmatched_warnings: list[WarningRecord] = field(default_factory=list)
    unmatched_truth: list[GroundTruthEntry] = field(default_factory=list)


def load_type_map(path: str | Path | None = None) -> dict[str, str]:
    """Load the scanner-type -> category table (bundled table by default)."""
    if path is None:
        text = (
            resources.files("sast_triage.data")
            .joinpath("type_categories.tsv")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    mapping: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise IngestError(
                f"type map line {lineno}: expected 2 tab-separated fields, got {len(parts)}"
            )
        type_code, category = parts[0].strip(), parts[1].strip()
        if category not in _CATEGORY_SET:
            raise IngestError(f"type map line {lineno}: unknown category {category!r}")
        mapping[type_code] = category
    return mapping


def _byte_offset(data: bytes, line: int, column: int) -> int:
    # expat positions are (1-based line, 0-based column)
    lines = data.split(b"\n")
    return sum(len(ln) + 1 for ln in lines[: line - 1]) + column


def parse_xml_root(report_bytes: bytes) -> ET.Element:
    try:
        root = ET.fromstring(report_bytes)
    except ET.ParseError as exc:
        line, column = exc.position
        offset = _byte_offset(report_bytes, line, column)
        raise ReportParseError(
            f"malformed XML at byte offset {offset}: {exc}", byte_offset=offset
        ) from exc
    if root.tag != "BugCollection":
        raise ReportParseError(
            f"unexpected root element {root.tag!r}, expected 'BugCollection'"
        )
    return root


def iter_instances(root: ET.Element, type_map: dict[str, str]):
    """Yield (index, element, record-or-None, skip-reason-or-None) for every
    BugInstance child, in document order. Shared by parsing and filtering so
    both sides count warnings identically."""
    for index, bug in enumerate(root.findall("BugInstance")):
        vuln_type = bug.get("type")
        if not vuln_type:
            yield index, bug, None, "missing type attribute"
            continue
        category = type_map.get(vuln_type)
        if category is None:
            yield index, bug, None, f"no category mapping for type {vuln_type!r}"
            continue
        spans: list[tuple[int, int]] = []
        source_path = None
        bad_span = None
        # Only direct SourceLine children mark the finding; Class and Method
        # carry their own SourceLine extents which are not part of it.
        for sl in bug.findall("SourceLine"):
            start_attr, end_attr = sl.get("start"), sl.get("end")
            if start_attr is None or end_attr is None:
                continue
            try:
                start, end = int(start_attr), int(end_attr)
            except ValueError:
                bad_span = f"non-integer span {start_attr!r}..{end_attr!r}"
                break
            if start < 1 or end < start:
                bad_span = f"invalid span {start}..{end}"
                break
            spans.append((start, end))
            if source_path is None:
                source_path = sl.get("sourcepath")
        if bad_span:
            yield index, bug, None, bad_span
            continue
        if not spans:
            yield index, bug, None, "no SourceLine with line numbers"
            continue
        if not source_path:
            yield index, bug, None, "no SourceLine with a sourcepath"
            continue
        class_el = bug.find("Class")
        method_el = bug.find("Method")
        record = WarningRecord(
            source_file=source_path,
            class_name=class_el.get("classname", "") if class_el is not None else "",
            method_name=method_el.get("name", "") if method_el is not None else "",
            vuln_type=vuln_type,
            category_code=category,
            line_spans=spans,
        )
        yield index, bug, record, None


def parse_report(
    report_bytes: bytes, type_map: dict[str, str] | None = None
) -> ReportParseResult:
    """Parse a BugCollection report into warning records.

    Instances without usable line information or without a category mapping
    are skipped and counted, never silently dropped:
    ``len(records) + len(skipped)`` always equals the BugInstance count.
    """
    if type_map is None:
        type_map = load_type_map()
    root = parse_xml_root(report_bytes)
    records: list[WarningRecord] = []
    skipped: list[SkippedInstance] = []
    for index, bug, record, reason in iter_instances(root, type_map):
        if record is not None:
            records.append(record)
        else:
            skipped.append(SkippedInstance(index, bug.get("type"), reason))
    return ReportParseResult(records, skipped)


def parse_ground_truth(data: bytes | str) -> list[GroundTruthEntry]:
    """Parse the expected-results CSV: ``test_name, category, is_real, cwe``.

    ``#`` comment lines are ignored; a leading header row (third column not a
    boolean) is ignored too. Duplicate (test_name, category) keys are an
    error.
    """
    text = data.decode("utf-8") if isinstance(data, bytes) else data
    entries: list[GroundTruthEntry] = []
    seen: dict[tuple[str, str], int] = {}
    first_data_line = True
    for lineno, row in _iter_csv_rows(text):
        if len(row) != 4:
            raise GroundTruthError(
                f"line {lineno}: expected 4 columns, got {len(row)}"
            )
        name, category, real_text, cwe_text = (f.strip() for f in row)
        if first_data_line and real_text.lower() not in ("true", "false"):
            first_data_line = False  # header row
            continue
        first_data_line = False
        if category not in _CATEGORY_SET:
            raise GroundTruthError(f"line {lineno}: unknown category {category!r}")
        if real_text.lower() not in ("true", "false"):
            raise GroundTruthError(
                f"line {lineno}: third column must be true/false, got {real_text!r}"
            )
        try:
            cwe = int(cwe_text)
        except ValueError:
            raise GroundTruthError(
                f"line {lineno}: CWE column must be an integer, got {cwe_text!r}"
            ) from None
        key = (name, category)
        if key in seen:
            raise GroundTruthError(
                f"line {lineno}: duplicate entry for {key}, first seen on line {seen[key]}"
            )
        seen[key] = lineno
        entries.append(GroundTruthEntry(name, category, real_text.lower() == "true", cwe))
    return entries


def _iter_csv_rows(text: str):
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        row = next(csv.reader(io.StringIO(line)))
        yield lineno, row


def extract_snippet(source_root: str | Path, record: WarningRecord) -> str:
    """Read the lines covered by the record's spans out of the source tree.

    Spans are concatenated in order with overlaps de-duplicated, so every
    physical line appears at most once. Sets ``record.code_block``.
    """
    path = Path(source_root) / record.source_file
    if not path.is_file():
        raise ExtractionError(f"source file not found: {path}")
    lines = path.read_text(encoding="utf-8", errors="replace").splitlines()
    seen: set[int] = set()
    ordered: list[int] = []
    for start, end in record.line_spans:
        if end > len(lines):
            raise ExtractionError(
                f"{path}: span {start}..{end} exceeds file length {len(lines)}"
            )
        for ln in range(start, end + 1):
            if ln not in seen:
                seen.add(ln)
                ordered.append(ln)
    block = "\n".join(lines[ln - 1] for ln in ordered)
    record.code_block = block
    return block


def join_labels(
    warnings: list[WarningRecord], truth: list[GroundTruthEntry]
) -> tuple[list[LabeledSample], JoinReport]:
    """Join warnings to truth entries on (file basename sans extension,
    category). Unmatched rows on either side are reported, not dropped.
    Several warnings may join to the same truth entry."""
    by_key = {(t.test_name, t.category_code): t for t in truth}
    matched_keys: set[tuple[str, str]] = set()
    samples: list[LabeledSample] = []
    report = JoinReport()
    for w in warnings:
        key = (Path(w.source_file).stem, w.category_code)
        entry = by_key.get(key)
        if entry is None:
            report.unmatched_warnings.append(w)
            continue
        matched_keys.add(key)
        samples.append(
            LabeledSample(warning=w, label=LABEL_REAL if entry.is_real else LABEL_SPURIOUS)
        )
    report.matched = len(samples)
    report.unmatched_truth = [
        t for t in truth if (t.test_name, t.category_code) not in matched_keys
    ]
    return samples, report


def corpus_fingerprint_of_blocks(blocks: list[str]) -> str:
    h = hashlib.sha256()
    for block in blocks:
        h.update(block.encode("utf-8"))
        h.update(b"\x1e")
    return h.hexdigest()


# --- labeled dataset file -------------------------------------------------
#
# One sample per line, tab separated:
#   source_file  category  vuln_type  label  spans  code_block
# spans is "start-end,start-end"; code_block has backslash, tab, CR and LF
# escaped as \\ \t \r \n so the row stays one physical line.

_ESCAPES = [("\\", "\\\\"), ("\t", "\\t"), ("\r", "\\r"), ("\n", "\\n")]


def escape_block(text: str) -> str:
    for raw, esc in _ESCAPES:
        text = text.replace(raw, esc)
    return text


def unescape_block(text: str) -> str:
    out: list[str] = []
    i = 0
    while i < len(text):
        c = text[i]
        if c == "\\" and i + 1 < len(text):
            nxt = text[i + 1]
            out.append({"n": "\n", "t": "\t", "r": "\r", "\\": "\\"}.get(nxt, nxt))
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _format_spans(spans: list[tuple[int, int]]) -> str:
    return ",".join(f"{s}-{e}" for s, e in spans)


def _parse_spans(text: str) -> list[tuple[int, int]]:
    spans = []
    for part in text.split(","):
        start_text, _, end_text = part.partition("-")
        spans.append((int(start_text), int(end_text)))
    return spans


def write_dataset(samples: list[LabeledSample], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(DATASET_HEADER + "\n")
        for s in samples:
            w = s.warning
            fh.write(
                "\t".join(
                    (
                        w.source_file,
                        w.category_code,
                        w.vuln_type,
                        s.label,
                        _format_spans(w.line_spans),
                        escape_block(w.code_block),
                    )
                )
                + "\n"
            )


def read_dataset(path: str | Path) -> list[LabeledSample]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != DATASET_HEADER:
        found = lines[0] if lines else "<empty file>"
        raise DatasetFormatError(
            f"expected dataset header {DATASET_HEADER!r}, found {found!r}"
        )
    samples: list[LabeledSample] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        fields = line.split("\t")
        if len(fields) != 6:
            raise DatasetFormatError(f"line {lineno}: expected 6 fields, got {len(fields)}")
        source_file, category, vuln_type, label, spans_text, block = fields
        if label not in (LABEL_REAL, LABEL_SPURIOUS):
            raise DatasetFormatError(f"line {lineno}: unknown label {label!r}")
        record = WarningRecord(
            source_file=source_file,
            class_name="",
            method_name="",
            vuln_type=vuln_type,
            category_code=category,
            line_spans=_parse_spans(spans_text),
            code_block=unescape_block(block),
        )
        samples.append(LabeledSample(warning=record, label=label))
    return samples
