"""Scheduling twin for dataflow RAN pipelines (python front to the C++ core)."""

import os

from ._core import (
    DiagnosticError,
    check_schedule,
    classify,
    delta_pct,
    format_flows,
    generate_catalog,
    report_dir,
    run_command,
    solve_graph,
)

__all__ = [
    "DiagnosticError",
    "check_schedule",
    "classify",
    "delta_pct",
    "format_flows",
    "generate_catalog",
    "report_dir",
    "run_command",
    "solve_graph",
    "write_files",
]


def write_files(result, out_dir=None):
    """Write the files of a run_command result; returns the paths."""
    out_dir = out_dir or result.get("out") or "."
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    for name, content in result["files"].items():
        path = os.path.join(out_dir, name)
        tmp = path + ".tmp"
        with open(tmp, "w") as f:
            f.write(content)
        os.replace(tmp, path)
        paths.append(path)
    return paths
