"""Binary model files.

Layout (all integers little-endian)::

    8 bytes   magic b"CDNSMDL\\0"
    4 bytes   uint32 format version
    8 bytes   uint64 length L of the JSON header
    L bytes   UTF-8 JSON header, keys sorted, no whitespace
    ...       array payload, each array C-ordered little-endian, 8-byte aligned

The header holds ``kind``, a ``meta`` object and an ``arrays`` list of
``{name, dtype, shape, offset, nbytes}`` with offsets relative to the start
of the payload. Floats in the header are written with ``repr`` precision, so
every value round-trips bit-exactly and identical models give identical files.
"""

import json
import struct

import numpy as np

from . import regress
from .errors import CondensityError
from .estimator import FitConfig, FittedEstimator
from .transform import ScalerState

MAGIC = b"CDNSMDL\0"
FORMAT_VERSION = 1


class ModelFormatError(CondensityError, ValueError):
    pass


def _to_le(a):
    a = np.ascontiguousarray(a)
    return a.astype(a.dtype.newbyteorder("<"), copy=False)


def pack(kind, meta, arrays):
    entries = []
    chunks = []
    offset = 0
    for name in sorted(arrays):
        a = _to_le(arrays[name])
        raw = a.tobytes()
        entries.append({"name": name, "dtype": a.dtype.str, "shape": list(a.shape),
                        "offset": offset, "nbytes": len(raw)})
        pad = (-len(raw)) % 8
        chunks.append(raw + b"\0" * pad)
        offset += len(raw) + pad
    header = json.dumps({"kind": kind, "meta": meta, "arrays": entries},
                        sort_keys=True, separators=(",", ":")).encode()
    return MAGIC + struct.pack("<IQ", FORMAT_VERSION, len(header)) + header + b"".join(chunks)


def unpack(blob):
    if len(blob) < 20 or blob[:8] != MAGIC:
        raise ModelFormatError("not a model file (bad magic)")
    version, hlen = struct.unpack("<IQ", blob[8:20])
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format version {version}")
    try:
        header = json.loads(blob[20:20 + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ModelFormatError(f"corrupt model header: {exc}") from exc
    base = 20 + hlen
    arrays = {}
    for e in header["arrays"]:
        start = base + e["offset"]
        if start + e["nbytes"] > len(blob):
            raise ModelFormatError(f"truncated payload for array {e['name']!r}")
        a = np.frombuffer(blob, dtype=np.dtype(e["dtype"]), count=int(np.prod(e["shape"], dtype=np.int64)),
                          offset=start)
        arrays[e["name"]] = a.reshape(e["shape"]).astype(a.dtype.newbyteorder("="))
    return header["kind"], header["meta"], arrays


def model_to_bytes(model):
    meta, arrays = model.to_arrays()
    return pack(model.variant, meta, arrays)


def model_from_bytes(blob):
    kind, meta, arrays = unpack(blob)
    if kind not in regress.MODELS:
        raise ModelFormatError(f"unknown model kind {kind!r}")
    return regress.MODELS[kind].from_arrays(meta, arrays)


def estimator_to_bytes(est):
    reg_meta, reg_arrays = est.model.to_arrays()
    s = est.scaler
    meta = {
        "config": est.config.to_dict(),
        "scaler": {"y_min": s.y_min, "y_max": s.y_max, "target_mean": s.target_mean, "target_std": s.target_std},
        "validation_ise": est.validation_ise,
        "rounds_trained": est.rounds_trained,
        "n_train": est.n_train,
        "n_val": est.n_val,
        "ise_history": list(est.ise_history),
        "model_variant": est.model.variant,
        "model_meta": reg_meta,
    }
    arrays = {f"model/{k}": v for k, v in reg_arrays.items()}
    arrays["scaler/feature_means"] = s.feature_means
    arrays["scaler/feature_stds"] = s.feature_stds
    return pack("fitted_estimator", meta, arrays)


def estimator_from_bytes(blob):
    kind, meta, arrays = unpack(blob)
    if kind != "fitted_estimator":
        raise ModelFormatError(f"expected a fitted_estimator file, found {kind!r}")
    try:
        variant = meta["model_variant"]
        reg_arrays = {k[len("model/"):]: v for k, v in arrays.items() if k.startswith("model/")}
        model = regress.MODELS[variant].from_arrays(meta["model_meta"], reg_arrays)
        sc = meta["scaler"]
        scaler = ScalerState(float(sc["y_min"]), float(sc["y_max"]), arrays["scaler/feature_means"],
                             arrays["scaler/feature_stds"], float(sc["target_mean"]), float(sc["target_std"]))
        return FittedEstimator(model, scaler, FitConfig.from_dict(meta["config"]), float(meta["validation_ise"]),
                               int(meta["rounds_trained"]), int(meta["n_train"]), int(meta["n_val"]),
                               tuple(meta["ise_history"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"corrupt estimator file: {exc}") from exc


def save_estimator(est, path):
    with open(path, "wb") as fh:
        fh.write(estimator_to_bytes(est))


def load_estimator(path):
    with open(path, "rb") as fh:
        return estimator_from_bytes(fh.read())
