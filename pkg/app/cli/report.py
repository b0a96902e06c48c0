"""CSV rendering for sweep tables and profile dumps."""

import csv
import io
from typing import Iterable, Optional, Sequence, Tuple

from app.schemas.report import ProfileCertificate, SweepRow

SWEEP_COLUMNS = (
    "scenario",
    "functional",
    "kappa",
    "delta",
    "h",
    "C",
    "eps_observed",
    "sup_dist",
    "decomp_residual",
    "wall_ms",
)
PROFILE_COLUMNS = ("x", "f", "F", "FF")


def format_number(value: Optional[float]) -> str:
    return "" if value is None else format(float(value), ".10g")


def _writer(buffer: io.StringIO):
    return csv.writer(buffer, lineterminator="\n")


def render_sweep(rows: Iterable[SweepRow]) -> str:
    buffer = io.StringIO()
    writer = _writer(buffer)
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        data = row.model_dump()
        writer.writerow(
            [data[c] if c in ("scenario", "functional") else format_number(data[c]) for c in SWEEP_COLUMNS]
        )
    return buffer.getvalue()


def render_profile(table: Sequence[Tuple[float, float, float, float]], certificate: ProfileCertificate) -> str:
    buffer = io.StringIO()
    writer = _writer(buffer)
    writer.writerow(PROFILE_COLUMNS)
    for entry in table:
        writer.writerow([format_number(v) for v in entry])
    buffer.write(f"# passed = {str(certificate.passed).lower()}\n")
    for key in ("delta", "blend_width", "amplitude", "sup_F", "F_at_ramp_end", "F_peak", "sup_FF"):
        buffer.write(f"# {key} = {format_number(getattr(certificate, key))}\n")
    buffer.write(f"# amplitude_below_delta_cubed = {str(certificate.amplitude_below_delta_cubed).lower()}\n")
    for name, value in sorted(certificate.violations.items()):
        buffer.write(f"# violation.{name} = {format_number(value)}\n")
    return buffer.getvalue()


def render_scenarios(summaries) -> str:
    header = ("name", "n", "width", "smooth", "L_spectrum", "kappa", "source")
    lines = []
    for s in summaries:
        kappa = " ".join(f"{k}={format_number(v)}" for k, v in s.kappa.items()) or "-"
        spectrum = ",".join(format_number(v) for v in s.L_spectrum) or "-"
        lines.append(
            (s.name, str(s.n), format_number(s.width), str(s.smooth).lower(), spectrum, kappa, s.source)
        )
    widths = [max(len(row[i]) for row in [header] + lines) for i in range(len(header))]
    return "".join(
        "  ".join(cell.ljust(width) for cell, width in zip(row, widths)).rstrip() + "\n"
        for row in [header] + lines
    )
