"""Delimited-text and graph-file exports.

All numeric text uses 10 significant digits with a "." separator, UTF-8
encoding and LF line endings, so identical runs produce byte-identical
files.
"""

from __future__ import annotations

import json
from pathlib import Path
from xml.sax.saxutils import quoteattr

from ._format import fmt
from .connect import ConnectednessReport, VdMatrix, density_grid, kde_density
from .errors import DataError
from .rolling import MeasureSeries, difference_series

GEXF_NAMESPACE = "http://gexf.net/1.3"
DEFAULT_EDGE_THRESHOLD = 1e-4


def _open(path):
    return Path(path).open("w", newline="", encoding="utf-8")


def write_vd_csv(vdm: VdMatrix, report: ConnectednessReport, path) -> None:
    """Connectedness table: share matrix in percent with margin rows.

    Row i's entry columns are 100 * theta[i, j] and sum to 100; the `from`
    column holds off-diagonal row sums, the `to` row off-diagonal column
    sums with the system-wide index in its corner, and the `net` row their
    differences.
    """
    labels = report.labels
    theta_pct = 100.0 * vdm.theta
    with _open(path) as handle:
        handle.write("label," + ",".join(labels) + ",from\n")
        for i, lab in enumerate(labels):
            cells = [lab] + [fmt(v) for v in theta_pct[i]] + [fmt(report.from_others[i])]
            handle.write(",".join(cells) + "\n")
        handle.write(
            "to," + ",".join(fmt(v) for v in report.to_others) + f",{fmt(report.system_wide)}\n"
        )
        handle.write("net," + ",".join(fmt(v) for v in report.net) + ",\n")


def report_to_dict(report: ConnectednessReport, vdm: VdMatrix | None = None) -> dict:
    """All report fields keyed by measure name, JSON-ready."""
    by_label = lambda arr: {lab: float(v) for lab, v in zip(report.labels, arr)}
    by_cluster = lambda arr: {cid: float(v) for cid, v in zip(report.cluster_ids, arr)}
    pairs = {
        cid: {
            kid: float(report.contagion_pairs[ci, ki])
            for ki, kid in enumerate(report.cluster_ids)
            if ki != ci
        }
        for ci, cid in enumerate(report.cluster_ids)
    }
    out = {
        "system_wide": float(report.system_wide),
        "within_cluster": float(report.within_cluster),
        "cross_cluster": float(report.cross_cluster),
        "to": by_label(report.to_others),
        "from": by_label(report.from_others),
        "net": by_label(report.net),
        "cluster_own": by_cluster(report.own_share),
        "cluster_comove": by_cluster(report.comove_share),
        "cluster_contagion_received": by_cluster(report.contagion_received),
        "contagion_pairs": pairs,
        "own_avg": float(report.own_avg),
        "comove_avg": float(report.comove_avg),
        "contagion_avg": float(report.contagion_avg),
        "regional_net": by_cluster(report.regional_net),
    }
    if vdm is not None:
        out["scheme"] = vdm.scheme
        out["horizon"] = vdm.horizon
        ordering = vdm.ordering
        out["ordering"] = list(ordering) if isinstance(ordering, tuple) else ordering
    return out


def write_report_json(report: ConnectednessReport, vdm: VdMatrix, path) -> None:
    with _open(path) as handle:
        json.dump(report_to_dict(report, vdm), handle, indent=2, sort_keys=True)
        handle.write("\n")


def write_density_csv(report: ConnectednessReport, path, points: int = 512) -> None:
    """Kernel densities of the to/from/net cross-sections, long format."""
    with _open(path) as handle:
        handle.write("measure,x,density\n")
        for name, values in (
            ("to", report.to_others),
            ("from", report.from_others),
            ("net", report.net),
        ):
            grid = density_grid(values, points=points)
            dens = kde_density(values, grid)
            for x, d in zip(grid, dens):
                handle.write(f"{name},{fmt(x)},{fmt(d)}\n")


def write_gexf(
    vdm: VdMatrix,
    report: ConnectednessReport,
    path,
    node_sizes: dict[str, float] | None = None,
    threshold: float = DEFAULT_EDGE_THRESHOLD,
) -> None:
    """Directed GEXF graph of the share matrix.

    Edge j -> i carries weight theta[i, j] (the share of i's forecast-error
    variance due to shocks associated with j) plus the unordered-pair
    average as an attribute; edges below `threshold` and self-loops are
    omitted. Node attributes: net directional connectedness and the
    optional size attribute.
    """
    labels = report.labels
    theta = vdm.theta
    n = len(labels)
    with_size = node_sizes is not None
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<gexf xmlns="{GEXF_NAMESPACE}" version="1.3">',
        '  <graph defaultedgetype="directed">',
        '    <attributes class="node">',
        '      <attribute id="net" title="net" type="double"/>',
    ]
    if with_size:
        lines.append('      <attribute id="size" title="size" type="double"/>')
    lines += [
        "    </attributes>",
        '    <attributes class="edge">',
        '      <attribute id="pair_avg" title="pair_avg" type="double"/>',
        "    </attributes>",
        "    <nodes>",
    ]
    for i, lab in enumerate(labels):
        ident = quoteattr(lab)
        lines.append(f"      <node id={ident} label={ident}>")
        lines.append("        <attvalues>")
        lines.append(f'          <attvalue for="net" value="{fmt(report.net[i])}"/>')
        if with_size and lab in node_sizes:
            lines.append(f'          <attvalue for="size" value="{fmt(node_sizes[lab])}"/>')
        lines.append("        </attvalues>")
        lines.append("      </node>")
    lines.append("    </nodes>")
    lines.append("    <edges>")
    edge_id = 0
    for j in range(n):
        for i in range(n):
            if i == j:
                continue
            weight = theta[i, j]
            if weight < threshold:
                continue
            pair_avg = 0.5 * (theta[i, j] + theta[j, i])
            lines.append(
                f'      <edge id="{edge_id}" source={quoteattr(labels[j])} '
                f'target={quoteattr(labels[i])} weight="{fmt(weight)}">'
            )
            lines.append("        <attvalues>")
            lines.append(f'          <attvalue for="pair_avg" value="{fmt(pair_avg)}"/>')
            lines.append("        </attvalues>")
            lines.append("      </edge>")
            edge_id += 1
    lines.append("    </edges>")
    lines.append("  </graph>")
    lines.append("</gexf>")
    with _open(path) as handle:
        handle.write("\n".join(lines) + "\n")


def read_node_attributes(path) -> dict[str, float]:
    """Optional `label,size` CSV with one row per node."""
    path = Path(path)
    sizes: dict[str, float] = {}
    with path.open(newline="", encoding="utf-8") as handle:
        header = handle.readline().strip().split(",")
        if len(header) < 2:
            raise DataError(f"{path}: node attribute file needs `label,<attr>` columns")
        for lineno, line in enumerate(handle, start=2):
            line = line.strip()
            if not line:
                continue
            cells = line.split(",")
            try:
                sizes[cells[0]] = float(cells[1])
            except (IndexError, ValueError):
                raise DataError(f"{path}:{lineno}: bad attribute row {line!r}") from None
    return sizes


def _report_row(report: ConnectednessReport | None, labels, cluster_ids) -> list[str]:
    if report is None:
        return [""] * (3 + 3 * len(labels) + len(cluster_ids))
    cells = [fmt(report.system_wide), fmt(report.within_cluster), fmt(report.cross_cluster)]
    for i in range(len(labels)):
        cells += [fmt(report.to_others[i]), fmt(report.from_others[i]), fmt(report.net[i])]
    cells += [fmt(v) for v in report.regional_net]
    return cells


def write_rolling_csv(series: MeasureSeries, scheme: str, path) -> None:
    """Per-window measures for one scheme; failed windows leave empty cells."""
    if scheme not in series.reports:
        raise DataError(f"scheme {scheme!r} not present in rolling results")
    first = next(r for r in series.reports[scheme] if r is not None)
    labels, cluster_ids = first.labels, first.cluster_ids
    header = ["date", "system_wide", "within", "cross"]
    for lab in labels:
        header += [f"{lab}_to", f"{lab}_from", f"{lab}_net"]
    header += [f"{cid}_net" for cid in cluster_ids]
    with _open(path) as handle:
        handle.write(",".join(header) + "\n")
        for date, report in zip(series.dates, series.reports[scheme]):
            cells = [date.isoformat()] + _report_row(report, labels, cluster_ids)
            handle.write(",".join(cells) + "\n")


def write_difference_csv(series: MeasureSeries, path) -> None:
    """Generalized-minus-clustered aggregate curves."""
    diffs = difference_series(series)
    with _open(path) as handle:
        handle.write("date,total_diff,within_diff,cross_diff\n")
        for k, date in enumerate(series.dates):
            cells = [
                date.isoformat(),
                fmt(float(diffs["total"][k])),
                fmt(float(diffs["within"][k])),
                fmt(float(diffs["cross"][k])),
            ]
            handle.write(",".join(cells) + "\n")
