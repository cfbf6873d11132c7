"""Named-tensor checkpoint container and the key-value config sidecar.

Container layout (all integers little-endian):

    bytes 0..7    magic b"MLTC0001"
    bytes 8..15   header length H as uint64
    bytes 16..16+H  header: UTF-8 JSON
    rest          payload: raw little-endian tensor bytes, back to back

Header JSON: {"version": 1, "meta": {...}, "tensors": [{"name", "shape",
"dtype", "offset", "nbytes"}, ...]} with offsets relative to payload start.
Sidecar config files are `key = value` lines; values parse as int, float,
true/false booleans, or plain strings.
"""

import json
import os
import struct
import tempfile
from typing import Dict, Optional, Tuple

import numpy as np
import torch

MAGIC = b"MLTC0001"

_TORCH_TO_NP = {
    torch.float32: "<f4",
    torch.float64: "<f8",
    torch.int64: "<i8",
    torch.int32: "<i4",
}
_NP_TO_TORCH = {
    "<f4": torch.float32,
    "<f8": torch.float64,
    "<i8": torch.int64,
    "<i4": torch.int32,
}


def _atomic_write(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "wb") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_tensors(
    path: str, tensors: Dict[str, torch.Tensor], meta: Optional[dict] = None
) -> None:
    entries = []
    chunks = []
    offset = 0
    for name, t in tensors.items():
        dt = _TORCH_TO_NP.get(t.dtype)
        if dt is None:
            raise ValueError(f"unsupported dtype {t.dtype} for tensor {name!r}")
        arr = t.detach().cpu().contiguous().numpy().astype(np.dtype(dt), copy=False)
        raw = arr.tobytes()
        entries.append(
            {
                "name": name,
                "shape": list(t.shape),
                "dtype": dt,
                "offset": offset,
                "nbytes": len(raw),
            }
        )
        chunks.append(raw)
        offset += len(raw)
    header = json.dumps({"version": 1, "meta": meta or {}, "tensors": entries}).encode(
        "utf-8"
    )
    blob = MAGIC + struct.pack("<Q", len(header)) + header + b"".join(chunks)
    _atomic_write(path, blob)


def load_tensors(path: str) -> Tuple[Dict[str, torch.Tensor], dict]:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:8] != MAGIC:
        raise ValueError(f"{path}: not a checkpoint container (bad magic)")
    (hlen,) = struct.unpack("<Q", blob[8:16])
    header = json.loads(blob[16: 16 + hlen].decode("utf-8"))
    payload = blob[16 + hlen:]
    out: Dict[str, torch.Tensor] = {}
    for e in header["tensors"]:
        dt = e["dtype"]
        if dt not in _NP_TO_TORCH:
            raise ValueError(f"{path}: unsupported dtype {dt!r}")
        raw = payload[e["offset"]: e["offset"] + e["nbytes"]]
        arr = np.frombuffer(raw, dtype=np.dtype(dt)).reshape(e["shape"]).copy()
        out[e["name"]] = torch.from_numpy(arr)
    return out, header.get("meta", {})


def write_config(path: str, values: Dict[str, object]) -> None:
    lines = []
    for key in sorted(values):
        v = values[key]
        if isinstance(v, bool):
            v = "true" if v else "false"
        lines.append(f"{key} = {v}")
    _atomic_write(path, ("\n".join(lines) + "\n").encode("utf-8"))


def read_config(path: str) -> Dict[str, object]:
    out: Dict[str, object] = {}
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path} line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if val in ("true", "false"):
                out[key] = val == "true"
                continue
            try:
                out[key] = int(val)
                continue
            except ValueError:
                pass
            try:
                out[key] = float(val)
                continue
            except ValueError:
                pass
            out[key] = val
    return out
