"""Committed CSV schemas and validation.

The renderer consumes exactly the three CSV layouts the experiment
harness emits.  The column contracts are duplicated here (rather than
imported) so the package stands alone next to any producer that writes
the same files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import pandas as pd

# column name -> expected kind ("string", "integer", "real")
SCHEMAS: dict[str, dict[str, str]] = {
    "risk": {
        "scenario": "string",
        "n": "integer",
        "p": "integer",
        "seed": "integer",
        "estimator": "string",
        "risk": "real",
    },
    "samples": {
        "draw_id": "integer",
        "k": "integer",
        "sigma2": "real",
        "log_weight": "real",
        "theta_0": "real",
        "theta_1": "real",
        "source": "string",
    },
    "tv": {
        "scenario": "string",
        "n": "integer",
        "seed": "integer",
        "bins": "integer",
        "tv": "real",
    },
}


@dataclass
class SchemaReport:
    """Outcome of checking one CSV file against a named schema."""

    schema: str
    path: str
    ok: bool
    problems: list[str] = field(default_factory=list)

    def raise_if_failed(self) -> None:
        if not self.ok:
            raise ValueError(
                f"{self.path} does not match schema '{self.schema}': "
                + "; ".join(self.problems)
            )


def _kind_ok(series: pd.Series, kind: str) -> bool:
    if kind == "string":
        return True
    numeric = pd.to_numeric(series, errors="coerce")
    if numeric.isna().any():
        return False
    if kind == "integer":
        return bool((numeric == numeric.round()).all())
    return True


def validate_schema(csv_path, expected: str) -> SchemaReport:
    """Check column names and value kinds of ``csv_path`` against a schema.

    Returns a report rather than raising so callers can aggregate; use
    :meth:`SchemaReport.raise_if_failed` for the strict mode the CLI uses.
    """
    if expected not in SCHEMAS:
        raise ValueError(f"unknown schema '{expected}'; have {sorted(SCHEMAS)}")
    schema = SCHEMAS[expected]
    frame = pd.read_csv(csv_path, dtype=str)

    problems = []
    missing = [c for c in schema if c not in frame.columns]
    extra = [c for c in frame.columns if c not in schema]
    if missing:
        problems.append(f"missing columns: {missing}")
    if extra:
        problems.append(f"unexpected columns: {extra}")
    if list(frame.columns) == list(schema) and len(frame) == 0:
        problems.append("no data rows")
    for name, kind in schema.items():
        if name in frame.columns and not _kind_ok(frame[name], kind):
            problems.append(f"column '{name}' is not {kind}-valued")
    return SchemaReport(expected, str(csv_path), ok=not problems, problems=problems)
