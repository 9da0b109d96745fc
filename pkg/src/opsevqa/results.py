"""Output files: CSV tables with a provenance comment line, and JSON experiment records.

A CSV file starts with one ``#``-prefixed line holding the JSON provenance
(command, config, seed, library version) and then a normal header row. It
carries no timestamp, so reruns with the same config and seed write
identical bytes. JSON records carry a timestamp next to the payload.
"""
import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import __version__

SCHEMA_VERSION = 1


def provenance(command, config, seed):
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "version": __version__,
        "seed": seed,
        "config": config,
    }


def format_csv(columns, rows, meta):
    buf = io.StringIO()
    buf.write("# " + json.dumps(meta, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def read_csv(path):
    """``(meta, header, rows)`` of a file written by :func:`format_csv`; cells stay strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        first = fh.readline()
        if not first.startswith("# "):
            raise ValueError(f"{path}: missing provenance line")
        meta = json.loads(first[2:])
        rows = list(csv.reader(fh))
    return meta, rows[0], rows[1:]


def now_utc():
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


@dataclass
class ExperimentResult:
    command: str
    config: dict
    seed: int
    payload: dict
    version: str = __version__
    timestamp: str = field(default_factory=now_utc)
    schema_version: int = SCHEMA_VERSION

    def to_json(self):
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "version": self.version,
            "timestamp": self.timestamp,
            "seed": self.seed,
            "config": self.config,
            "payload": self.payload,
        }

    @classmethod
    def from_json(cls, obj):
        return cls(
            command=obj["command"],
            config=obj["config"],
            seed=obj["seed"],
            payload=obj["payload"],
            version=obj["version"],
            timestamp=obj["timestamp"],
            schema_version=obj["schema_version"],
        )

    def dumps(self):
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def write_text(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
