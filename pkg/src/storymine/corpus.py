"""Load, validate, filter, and persist story corpora.

Three interchangeable on-disk formats, all UTF-8:

* ``csv``: RFC-4180 rows ``id,text,tags[,source,posted_at]``, tags
  semicolon-separated (stories contain commas and newlines, so the
  quoting matters).
* ``jsonl``: one ``{"id", "text", "tags": [...]}`` object per line.
* ``txt-dir``: one ``<id>.txt`` file per story plus a ``manifest.json``
  carrying order, tags, and provenance.

Story text is preserved verbatim, including grammar and spelling.
"""

from __future__ import annotations

import csv
import datetime
import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import CorpusFormatError, DuplicateIdError, EmptyCorpusError
from .fingerprint import fingerprint_obj

FORMATS = ("csv", "jsonl", "txt-dir")

_SAFE_ID = re.compile(r"^[A-Za-z0-9._-]+$")


@dataclass(frozen=True)
class Document:
    """One story: unique id, verbatim text, lowercase tags, provenance."""

    id: str
    text: str
    tags: frozenset[str] = frozenset()
    source: str | None = None
    posted_at: str | None = None

    def __post_init__(self):
        if not self.id:
            raise CorpusFormatError("document id must be nonempty")
        object.__setattr__(self, "tags", frozenset(t.strip().lower() for t in self.tags if t.strip()))
        if self.posted_at is not None:
            try:
                datetime.date.fromisoformat(self.posted_at)
            except ValueError:
                raise CorpusFormatError(
                    f"document {self.id!r}: posted_at {self.posted_at!r} is not an ISO-8601 date"
                ) from None


@dataclass(frozen=True)
class DocumentSet:
    """Ordered collection of documents with unique ids."""

    documents: tuple[Document, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "documents", tuple(self.documents))
        seen = set()
        for doc in self.documents:
            if doc.id in seen:
                raise DuplicateIdError(f"duplicate document id {doc.id!r}", {"id": doc.id})
            seen.add(doc.id)

    @property
    def n(self) -> int:
        return len(self.documents)

    @property
    def ids(self) -> list[str]:
        return [d.id for d in self.documents]

    def fingerprint(self) -> str:
        return fingerprint_obj(
            [
                {"id": d.id, "text": d.text, "tags": sorted(d.tags), "source": d.source, "posted_at": d.posted_at}
                for d in self.documents
            ]
        )


def _check_text(doc_id: str, text: str, allow_empty: bool, where: str):
    if not allow_empty and not text:
        raise CorpusFormatError(f"{where}: document {doc_id!r} has empty text (pass allow_empty to accept)")


def _finish(docs: list[Document], allow_empty: bool, path) -> DocumentSet:
    if not docs and not allow_empty:
        raise EmptyCorpusError(f"no documents loaded from {path}")
    return DocumentSet(tuple(docs))


def _parse_tags(raw: str) -> frozenset[str]:
    return frozenset(t for t in (part.strip().lower() for part in raw.split(";")) if t)


def _load_csv(path: Path, allow_empty: bool) -> DocumentSet:
    docs = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise CorpusFormatError(f"{path}: empty file, expected a csv header")
        missing = {"id", "text"} - set(reader.fieldnames)
        if missing:
            raise CorpusFormatError(f"{path}: header missing columns {sorted(missing)}")
        for row in reader:
            line = reader.line_num
            doc_id = (row.get("id") or "").strip()
            if not doc_id:
                raise CorpusFormatError(f"{path}:{line}: row has no id")
            text = row.get("text")
            if text is None:
                raise CorpusFormatError(f"{path}:{line}: row has no text column value")
            _check_text(doc_id, text, allow_empty, f"{path}:{line}")
            docs.append(
                Document(
                    id=doc_id,
                    text=text,
                    tags=_parse_tags(row.get("tags") or ""),
                    source=(row.get("source") or None),
                    posted_at=(row.get("posted_at") or None),
                )
            )
    return _finish(docs, allow_empty, path)


def _load_jsonl(path: Path, allow_empty: bool) -> DocumentSet:
    docs = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{line_no}: invalid JSON ({exc.msg})") from None
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise CorpusFormatError(f"{path}:{line_no}: expected an object with id and text")
            doc_id = str(obj["id"])
            text = obj["text"]
            if not isinstance(text, str):
                raise CorpusFormatError(f"{path}:{line_no}: text must be a string")
            _check_text(doc_id, text, allow_empty, f"{path}:{line_no}")
            docs.append(
                Document(
                    id=doc_id,
                    text=text,
                    tags=frozenset(obj.get("tags") or ()),
                    source=obj.get("source"),
                    posted_at=obj.get("posted_at"),
                )
            )
    return _finish(docs, allow_empty, path)


def _load_txt_dir(path: Path, allow_empty: bool) -> DocumentSet:
    manifest_path = path / "manifest.json"
    if not manifest_path.is_file():
        raise CorpusFormatError(f"{path}: txt-dir corpus needs a manifest.json")
    with open(manifest_path, encoding="utf-8") as fh:
        try:
            manifest = json.load(fh)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"{manifest_path}: invalid JSON ({exc.msg})") from None
    entries = manifest.get("documents")
    if not isinstance(entries, list):
        raise CorpusFormatError(f"{manifest_path}: expected a top-level 'documents' list")
    docs = []
    for i, entry in enumerate(entries):
        doc_id = str(entry.get("id", "")).strip()
        if not doc_id:
            raise CorpusFormatError(f"{manifest_path}: documents[{i}] has no id")
        story_path = path / f"{doc_id}.txt"
        if not story_path.is_file():
            raise CorpusFormatError(f"{path}: missing story file {doc_id}.txt listed in manifest")
        text = story_path.read_text(encoding="utf-8")
        _check_text(doc_id, text, allow_empty, str(story_path))
        docs.append(
            Document(
                id=doc_id,
                text=text,
                tags=frozenset(entry.get("tags") or ()),
                source=entry.get("source"),
                posted_at=entry.get("posted_at"),
            )
        )
    return _finish(docs, allow_empty, path)


def load_corpus(path, format: str, allow_empty: bool = False) -> DocumentSet:
    """Load a corpus file into a DocumentSet, preserving input order.

    Duplicate ids, malformed rows (reported with line numbers), and
    empty documents are rejected; ``allow_empty`` permits empty story
    text and an empty document set.
    """
    path = Path(path)
    if format not in FORMATS:
        raise CorpusFormatError(f"unknown corpus format {format!r}, expected one of {FORMATS}")
    if format == "txt-dir":
        if not path.is_dir():
            raise CorpusFormatError(f"{path}: not a directory")
    elif not path.is_file():
        raise CorpusFormatError(f"{path}: no such file")
    if format == "csv":
        return _load_csv(path, allow_empty)
    if format == "jsonl":
        return _load_jsonl(path, allow_empty)
    return _load_txt_dir(path, allow_empty)


def infer_format(path) -> str:
    path = Path(path)
    if path.is_dir():
        return "txt-dir"
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson", ".json"):
        return "jsonl"
    raise CorpusFormatError(f"cannot infer corpus format from {path.name!r}; pass --format")


def filter_documents(ds: DocumentSet, tag: str) -> DocumentSet:
    """Keep documents carrying ``tag``, in their original order."""
    if not tag:
        raise ValueError("tag must be nonempty")
    tag = tag.strip().lower()
    return DocumentSet(tuple(d for d in ds.documents if tag in d.tags))


def persist_corpus(ds: DocumentSet, path, format: str) -> None:
    """Write ``ds`` so that ``load_corpus`` round-trips it field-for-field."""
    path = Path(path)
    if format not in FORMATS:
        raise CorpusFormatError(f"unknown corpus format {format!r}, expected one of {FORMATS}")
    if format == "csv":
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["id", "text", "tags", "source", "posted_at"])
            for d in ds.documents:
                writer.writerow([d.id, d.text, ";".join(sorted(d.tags)), d.source or "", d.posted_at or ""])
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for d in ds.documents:
                obj = {"id": d.id, "text": d.text, "tags": sorted(d.tags)}
                if d.source is not None:
                    obj["source"] = d.source
                if d.posted_at is not None:
                    obj["posted_at"] = d.posted_at
                fh.write(json.dumps(obj, ensure_ascii=False) + "\n")
    else:
        for d in ds.documents:
            if not _SAFE_ID.match(d.id):
                raise CorpusFormatError(
                    f"document id {d.id!r} is not a safe filename; txt-dir needs ids matching {_SAFE_ID.pattern}"
                )
        path.mkdir(parents=True, exist_ok=True)
        entries = []
        for d in ds.documents:
            (path / f"{d.id}.txt").write_text(d.text, encoding="utf-8")
            entry: dict = {"id": d.id, "tags": sorted(d.tags)}
            if d.source is not None:
                entry["source"] = d.source
            if d.posted_at is not None:
                entry["posted_at"] = d.posted_at
            entries.append(entry)
        with open(path / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump({"documents": entries}, fh, ensure_ascii=False, indent=2)
            fh.write("\n")
