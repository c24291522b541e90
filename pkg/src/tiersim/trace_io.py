"""Lossless trace container.

Traces are stored as a compressed ``.npz``: a JSON header (format tag,
version, meta, regions) plus flat int64 arrays in CSR form — blocks index
into a run table via ``block_run_start``.  All quantities are integers, so
a round trip reproduces the trace exactly.
"""

from __future__ import annotations

import json

import numpy as np

from .workloads import AccessKind, AccessRun, Region, Trace, TraceMeta, WorkBlock

FORMAT = "tiersim-trace"
VERSION = 1


class TraceFormatError(ValueError):
    pass


def save_trace(trace: Trace, path) -> None:
    header = {
        "format": FORMAT,
        "version": VERSION,
        "meta": {
            "name": trace.meta.name,
            "parameters": trace.meta.parameters,
            "total_flops": trace.meta.total_flops,
            "total_bytes": trace.meta.total_bytes,
            "footprint_bytes": trace.meta.footprint_bytes,
            "arithmetic_intensity": trace.meta.arithmetic_intensity,
        },
        "regions": [
            {"id": r.id, "size": r.size, "label": r.label} for r in trace.regions
        ],
    }
    n_blocks = len(trace.blocks)
    block_thread = np.zeros(n_blocks, dtype=np.int64)
    block_flops = np.zeros(n_blocks, dtype=np.int64)
    block_run_start = np.zeros(n_blocks + 1, dtype=np.int64)
    cols = {k: [] for k in ("region", "offset", "length", "stride", "count", "kind")}
    for i, b in enumerate(trace.blocks):
        block_thread[i] = b.thread
        block_flops[i] = b.flops
        block_run_start[i] = len(cols["region"])
        for run in b.runs:
            cols["region"].append(run.region)
            cols["offset"].append(run.offset)
            cols["length"].append(run.length)
            cols["stride"].append(run.stride)
            cols["count"].append(run.count)
            cols["kind"].append(int(run.kind))
    block_run_start[n_blocks] = len(cols["region"])
    np.savez_compressed(
        path,
        header=np.frombuffer(json.dumps(header).encode(), dtype=np.uint8),
        block_thread=block_thread,
        block_flops=block_flops,
        block_run_start=block_run_start,
        **{f"run_{k}": np.array(v, dtype=np.int64) for k, v in cols.items()},
    )


def load_trace(path) -> Trace:
    with np.load(path) as data:
        try:
            header = json.loads(bytes(data["header"]).decode())
        except Exception as exc:
            raise TraceFormatError(f"unreadable trace header: {exc}") from exc
        if header.get("format") != FORMAT:
            raise TraceFormatError("not a tiersim trace file")
        if header.get("version") != VERSION:
            raise TraceFormatError(
                f"unsupported trace version {header.get('version')}"
            )
        regions = tuple(
            Region(r["id"], r["size"], r["label"]) for r in header["regions"]
        )
        bt = data["block_thread"]
        bf = data["block_flops"]
        brs = data["block_run_start"]
        rr = data["run_region"]
        ro = data["run_offset"]
        rl = data["run_length"]
        rs = data["run_stride"]
        rc = data["run_count"]
        rk = data["run_kind"]
        blocks = []
        for i in range(len(bt)):
            runs = tuple(
                AccessRun(int(rr[j]), int(ro[j]), int(rl[j]), AccessKind(int(rk[j])),
                          stride=int(rs[j]), count=int(rc[j]))
                for j in range(int(brs[i]), int(brs[i + 1]))
            )
            blocks.append(WorkBlock(int(bt[i]), runs, int(bf[i])))
        m = header["meta"]
        meta = TraceMeta(m["name"], m["parameters"], m["total_flops"],
                         m["total_bytes"], m["footprint_bytes"],
                         m["arithmetic_intensity"])
    return Trace(regions, tuple(blocks), meta)
