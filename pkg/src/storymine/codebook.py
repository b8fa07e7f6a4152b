"""Qualitative coding state: labels, retention decisions, themes.

The codebook is event-sourced: every mutation appends one audit entry,
and replaying the audit log from empty reconstructs the current state
exactly. Three-coder consensus workflow: coders label topics
independently, the group records a consensus label per retained topic,
deletes incoherent or off-scope topics, and groups what remains into
themes for the final report.
"""

from __future__ import annotations

import datetime
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import CodebookError, FingerprintMismatchError
from .report import TopicReport

CODEBOOK_FORMAT_VERSION = 1
THEME_REPORT_FORMAT_VERSION = 1

# Default taxonomy from the harassment literature; any other nonempty
# string is accepted as a custom theme or subtheme.
DEFAULT_THEMES = (
    "sex_discrimination",
    "sex_discrimination_and_gender_harassment",
    "unwanted_sexual_attention",
    "sexual_coercion",
)
DEFAULT_SUBTHEMES = (
    "sexist_hostility",
    "sexual_hostility",
    "gender_policing",
    "work_family_policing",
    "reporting",
)
DELETE_REASONS = ("incoherent", "off_scope", "other")
STATUSES = ("retained", "deleted")

THEME_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["format_version", "model_fingerprint", "themes"],
    "properties": {
        "format_version": {"const": THEME_REPORT_FORMAT_VERSION},
        "model_fingerprint": {"type": "string"},
        "themes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["theme", "subthemes"],
                "properties": {
                    "theme": {"type": "string", "minLength": 1},
                    "subthemes": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["subtheme", "topics"],
                            "properties": {
                                "subtheme": {"type": ["string", "null"]},
                                "topics": {
                                    "type": "array",
                                    "minItems": 1,
                                    "items": {
                                        "type": "object",
                                        "required": ["topic_index", "rank", "label"],
                                        "properties": {
                                            "topic_index": {"type": "integer", "minimum": 0},
                                            "rank": {"type": "integer", "minimum": 1},
                                            "label": {"type": "string", "minLength": 1},
                                            "description": {"type": ["string", "null"]},
                                        },
                                    },
                                },
                            },
                        },
                    },
                },
            },
        },
    },
}


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")


@dataclass(frozen=True)
class CoderLabel:
    topic_index: int
    coder_id: str
    label: str
    notes: str | None = None
    at: str = ""


@dataclass
class TopicDecision:
    topic_index: int
    status: str = "retained"
    reason: str | None = None
    consensus_label: str | None = None
    description: str | None = None


@dataclass(frozen=True)
class ThemeAssignment:
    topic_index: int
    theme: str
    subtheme: str | None = None


class CodeBook:
    """Mutable coding state for one trained model; single-writer semantics."""

    def __init__(self, model_fingerprint: str, k: int, coders: list[str] | None = None):
        if k < 1:
            raise CodebookError("k must be >= 1")
        self.model_fingerprint = model_fingerprint
        self.k = k
        self.coders: list[str] = []
        self.labels: dict[tuple[int, str], CoderLabel] = {}
        self.decisions: dict[int, TopicDecision] = {}
        self.themes: dict[int, ThemeAssignment] = {}
        self.audit: list[dict] = []
        for coder in coders or ():
            self.register_coder(coder)

    # -- queries ---------------------------------------------------------

    @property
    def version(self) -> int:
        return len(self.audit)

    def _check_topic(self, topic: int):
        if not 0 <= topic < self.k:
            raise CodebookError(f"topic index {topic} out of range for k={self.k}")

    def decision(self, topic: int) -> TopicDecision:
        self._check_topic(topic)
        return self.decisions.get(topic) or TopicDecision(topic_index=topic)

    def status(self, topic: int) -> str:
        return self.decision(topic).status

    def retained_topics(self) -> list[int]:
        return [t for t in range(self.k) if self.status(t) == "retained"]

    def deleted_topics(self) -> list[int]:
        return [t for t in range(self.k) if self.status(t) == "deleted"]

    def labels_for_topic(self, topic: int) -> dict[str, CoderLabel]:
        self._check_topic(topic)
        return {coder: lab for (t, coder), lab in self.labels.items() if t == topic}

    # -- mutations (each appends exactly one audit entry) ------------------

    def _record(self, op: str, payload: dict, at: str | None):
        entry = {"seq": len(self.audit) + 1, "op": op, "at": at or _now()}
        entry.update(payload)
        self.audit.append(entry)
        return entry

    def register_coder(self, coder_id: str, at: str | None = None):
        if not coder_id:
            raise CodebookError("coder id must be nonempty")
        if coder_id in self.coders:
            raise CodebookError(f"coder {coder_id!r} already registered")
        self._record("register_coder", {"coder": coder_id}, at)
        self.coders.append(coder_id)
        return self

    def record_coder_label(self, topic: int, coder: str, label: str, notes: str | None = None, at: str | None = None):
        """Upsert one coder's label for a topic; history stays in the audit log."""
        self._check_topic(topic)
        if coder not in self.coders:
            raise CodebookError(f"unknown coder {coder!r}")
        if not label or not label.strip():
            raise CodebookError("label must be nonempty")
        entry = self._record("record_coder_label", {"topic": topic, "coder": coder, "label": label, "notes": notes}, at)
        self.labels[(topic, coder)] = CoderLabel(topic, coder, label, notes, entry["at"])
        return self

    def set_topic_status(self, topic: int, status: str, reason: str | None = None, at: str | None = None):
        self._check_topic(topic)
        if status not in STATUSES:
            raise CodebookError(f"status must be one of {STATUSES}")
        if status == "deleted":
            if reason not in DELETE_REASONS:
                raise CodebookError(f"deleting a topic needs a reason from {DELETE_REASONS}")
        else:
            reason = None
        self._record("set_topic_status", {"topic": topic, "status": status, "reason": reason}, at)
        decision = self.decisions.setdefault(topic, TopicDecision(topic_index=topic))
        decision.status = status
        decision.reason = reason
        return self

    def record_consensus_label(self, topic: int, label: str, description: str | None = None, at: str | None = None):
        self._check_topic(topic)
        if self.status(topic) != "retained":
            raise CodebookError(f"topic {topic} is deleted; consensus applies to retained topics")
        if not label or not label.strip():
            raise CodebookError("consensus label must be nonempty")
        payload = {"topic": topic, "label": label, "description": description}
        if not self.labels_for_topic(topic):
            payload["flag"] = "no-individual-labels"
        self._record("record_consensus_label", payload, at)
        decision = self.decisions.setdefault(topic, TopicDecision(topic_index=topic))
        decision.consensus_label = label
        decision.description = description
        return self

    def assign_theme(self, topic: int, theme: str, subtheme: str | None = None, at: str | None = None):
        self._check_topic(topic)
        if self.status(topic) != "retained":
            raise CodebookError(f"topic {topic} is deleted; themes apply to retained topics")
        if not self.decision(topic).consensus_label:
            raise CodebookError(f"topic {topic} has no consensus label yet")
        if not theme or not theme.strip():
            raise CodebookError("theme must be nonempty")
        if subtheme is not None and not subtheme.strip():
            raise CodebookError("subtheme must be nonempty when given")
        self._record("assign_theme", {"topic": topic, "theme": theme, "subtheme": subtheme}, at)
        self.themes[topic] = ThemeAssignment(topic, theme, subtheme)
        return self

    # -- replay / persistence ---------------------------------------------

    _OPS = {
        "register_coder": lambda cb, e: cb.register_coder(e["coder"], at=e["at"]),
        "record_coder_label": lambda cb, e: cb.record_coder_label(
            e["topic"], e["coder"], e["label"], e.get("notes"), at=e["at"]
        ),
        "set_topic_status": lambda cb, e: cb.set_topic_status(e["topic"], e["status"], e.get("reason"), at=e["at"]),
        "record_consensus_label": lambda cb, e: cb.record_consensus_label(
            e["topic"], e["label"], e.get("description"), at=e["at"]
        ),
        "assign_theme": lambda cb, e: cb.assign_theme(e["topic"], e["theme"], e.get("subtheme"), at=e["at"]),
    }

    @classmethod
    def replay(cls, audit: list[dict], model_fingerprint: str, k: int) -> "CodeBook":
        """Rebuild a codebook by applying the audit log from empty."""
        cb = cls(model_fingerprint, k)
        for entry in audit:
            op = entry.get("op")
            if op not in cls._OPS:
                raise CodebookError(f"unknown audit op {op!r} at seq {entry.get('seq')}")
            cls._OPS[op](cb, entry)
        return cb

    def state_dict(self) -> dict:
        """Materialized current state (no audit log); canonical ordering."""
        return {
            "coders": list(self.coders),
            "labels": [
                {
                    "topic": lab.topic_index,
                    "coder": lab.coder_id,
                    "label": lab.label,
                    "notes": lab.notes,
                    "at": lab.at,
                }
                for (t, c), lab in sorted(self.labels.items())
            ],
            "decisions": [
                {
                    "topic": d.topic_index,
                    "status": d.status,
                    "reason": d.reason,
                    "consensus_label": d.consensus_label,
                    "description": d.description,
                }
                for t, d in sorted(self.decisions.items())
            ],
            "themes": [
                {"topic": a.topic_index, "theme": a.theme, "subtheme": a.subtheme}
                for t, a in sorted(self.themes.items())
            ],
        }

    def to_json(self) -> str:
        obj = {
            "format_version": CODEBOOK_FORMAT_VERSION,
            "model_fingerprint": self.model_fingerprint,
            "k": self.k,
            "audit": self.audit,
            "state": self.state_dict(),
        }
        return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "CodeBook":
        obj = json.loads(text)
        if obj.get("format_version") != CODEBOOK_FORMAT_VERSION:
            raise CodebookError(f"unsupported codebook format_version {obj.get('format_version')!r}")
        cb = cls.replay(obj["audit"], obj["model_fingerprint"], obj["k"])
        if cb.state_dict() != obj["state"]:
            raise CodebookError("codebook state does not match its audit log replay")
        return cb

    def save(self, path) -> None:
        Path(path).write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "CodeBook":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))


def _ordered(values, defaults) -> list:
    known = [v for v in defaults if v in values]
    custom = sorted(v for v in values if v not in defaults)
    return known + custom


def export_theme_report(cb: CodeBook, report: TopicReport) -> dict:
    """Theme -> subtheme -> topic rows for the final grouped report.

    Every retained topic must already carry a theme; offenders are
    listed in the error. Deleted topics never appear.
    """
    if cb.model_fingerprint != report.model_fingerprint:
        raise FingerprintMismatchError("codebook and report come from different models")
    retained = cb.retained_topics()
    unthemed = [t for t in retained if t not in cb.themes]
    if unthemed:
        raise CodebookError(
            f"retained topics without a theme: {unthemed}", {"unthemed": unthemed}
        )
    grouped: dict[str, dict[str | None, list[int]]] = {}
    for t in retained:
        a = cb.themes[t]
        grouped.setdefault(a.theme, {}).setdefault(a.subtheme, []).append(t)
    themes_out = []
    for theme in _ordered(grouped, DEFAULT_THEMES):
        sub_map = grouped[theme]
        sub_names = ([None] if None in sub_map else []) + _ordered(
            [s for s in sub_map if s is not None], DEFAULT_SUBTHEMES
        )
        subthemes_out = []
        for sub in sub_names:
            topics = []
            for t in sorted(sub_map[sub], key=lambda t: report.by_topic_index(t).rank):
                d = cb.decision(t)
                topics.append(
                    {
                        "topic_index": t,
                        "rank": report.by_topic_index(t).rank,
                        "label": d.consensus_label,
                        "description": d.description,
                    }
                )
            subthemes_out.append({"subtheme": sub, "topics": topics})
        themes_out.append({"theme": theme, "subthemes": subthemes_out})
    return {
        "format_version": THEME_REPORT_FORMAT_VERSION,
        "model_fingerprint": cb.model_fingerprint,
        "themes": themes_out,
    }


def theme_report_to_json(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"


def _display(name: str | None) -> str:
    return "" if name is None else name.replace("_", " ").title()


def theme_report_markdown(doc: dict) -> str:
    lines = ["| Theme | Subtheme | Topic (Rank) | Description |", "| --- | --- | --- | --- |"]
    body = False
    for theme in doc["themes"]:
        for sub in theme["subthemes"]:
            for topic in sub["topics"]:
                body = True
                label = f"{topic['label']} ({topic['rank']})"
                lines.append(
                    f"| {_display(theme['theme'])} | {_display(sub['subtheme'])} "
                    f"| {label} | {topic['description'] or ''} |"
                )
    if not body:
        return "No retained topics to report: every topic is deleted.\n"
    return "\n".join(lines) + "\n"


def theme_report_csv(doc: dict) -> str:
    lines = ["theme,subtheme,topic_label,rank,description"]
    for theme in doc["themes"]:
        for sub in theme["subthemes"]:
            for topic in sub["topics"]:
                fields = [
                    theme["theme"],
                    sub["subtheme"] or "",
                    topic["label"] or "",
                    str(topic["rank"]),
                    topic["description"] or "",
                ]
                lines.append(",".join('"' + f.replace('"', '""') + '"' for f in fields))
    return "\n".join(lines) + "\n"
