"""Independent reference for .tko decoding and comparison metrics.

usage: trako_oracle.py ORIGINAL.tck CONTAINER.tko [BINS]

Prints a JSON object with the quantization codes check, decoded vertex
statistics and the overlap score, computed with numpy only.
"""
import base64
import json
import sys
import zlib

import numpy as np


def read_tck(path):
    data = open(path, "rb").read()
    end = data.index(b"\nEND\n")
    header = data[:end].decode().split("\n")
    assert header[0] == "mrtrix tracks"
    fields = dict(line.split(": ", 1) for line in header[1:] if ": " in line)
    assert fields["datatype"] == "Float32LE"
    offset = int(fields["file"].split()[1])
    pts = np.frombuffer(data[offset:], dtype="<f4").reshape(-1, 3)
    streamlines, cur = [], []
    for p in pts:
        if np.isinf(p[0]):
            break
        if np.isnan(p[0]):
            if cur:
                streamlines.append(np.array(cur, dtype=np.float32))
            cur = []
        else:
            cur.append(p)
    if cur:
        streamlines.append(np.array(cur, dtype=np.float32))
    return streamlines


def varints(raw):
    out, shift, acc = [], 0, 0
    for b in raw:
        acc |= (b & 0x7F) << shift
        if b & 0x80:
            shift += 7
        else:
            out.append(acc)
            acc, shift = 0, 0
    assert shift == 0, "truncated varint"
    return np.array(out, dtype=np.int64)


def decode(doc, blob, acc_index):
    acc = doc["accessors"][acc_index]
    ext = acc["extensions"]["TRAKO_compressed"]
    view = doc["bufferViews"][ext["bufferView"]]
    raw = blob[view.get("byteOffset", 0):view.get("byteOffset", 0) + view["byteLength"]]
    stages = ext["stages"]
    if "deflate" in stages:
        raw = zlib.decompress(raw, -15)
    ints = varints(raw)
    if "zigzag" in stages:
        ints = (ints >> 1) ^ -(ints & 1)
    ints = ints.reshape(ext["count"], ext["components"])
    if "delta" in stages:
        ints = np.cumsum(ints, axis=0)
    return ext, ints


def dequantize(ext, codes):
    levels = float(2 ** ext["bits"] - 1)
    lo = np.array(ext["minValues"])
    hi = np.array(ext["maxValues"])
    out = lo + codes.astype(np.float64) * (hi - lo) / levels
    out = np.where(codes == 0, lo, out)
    out = np.where(codes == levels, hi, out)
    return np.where(hi <= lo, lo, out)


def quantize(values, ext):
    levels = float(2 ** ext["bits"] - 1)
    lo = np.array(ext["minValues"])
    rng = np.array(ext["maxValues"]) - lo
    safe = np.where(rng > 0, rng, 1.0)
    q = np.floor((values.astype(np.float64) - lo) * levels / safe + 0.5)
    return np.where(rng > 0, np.clip(q, 0, levels), 0).astype(np.int64)


def stats(e):
    return {"min": float(e.min()), "max": float(e.max()), "mean": float(e.mean()), "std": float(e.std())}


def overlap(a, b, bins):
    total = 0.0
    for axis in range(3):
        x = a[:, axis].astype(np.float64)
        y = b[:, axis].astype(np.float64)
        lo, hi = min(x.min(), y.min()), max(x.max(), y.max())
        if hi > lo:
            ix = np.minimum(np.floor((x - lo) / (hi - lo) * bins), bins - 1).astype(np.int64)
            iy = np.minimum(np.floor((y - lo) / (hi - lo) * bins), bins - 1).astype(np.int64)
        else:
            ix = np.zeros(len(x), dtype=np.int64)
            iy = np.zeros(len(y), dtype=np.int64)
        p = np.bincount(ix, minlength=bins).astype(np.float64)
        q = np.bincount(iy, minlength=bins).astype(np.float64)
        total += min(np.sqrt(p * q).sum() / np.sqrt(len(x) * float(len(y))), 1.0)
    return total / 3.0


def main():
    tck_path, tko_path = sys.argv[1], sys.argv[2]
    bins = int(sys.argv[3]) if len(sys.argv) > 3 else 128
    streamlines = read_tck(tck_path)
    orig = np.concatenate(streamlines)
    doc = json.load(open(tko_path))
    uri = doc["buffers"][0]["uri"]
    blob = base64.b64decode(uri.split(",", 1)[1])
    mesh = doc["meshes"][0]
    ext_t = mesh["extensions"]["TRAKO_tractogram"]

    ext, codes = decode(doc, blob, mesh["primitives"][0]["attributes"]["POSITION"])
    restored = dequantize(ext, codes).astype(np.float32)
    _, offsets = decode(doc, blob, ext_t["offsets"])
    offsets = offsets.ravel()
    lengths = np.array([len(s) for s in streamlines])

    err = np.linalg.norm(orig.astype(np.float64) - restored.astype(np.float64), axis=1)
    starts = offsets[:-1]
    ends = offsets[1:] - 1
    ep_idx = np.concatenate([np.stack([starts, ends], axis=1)[lengths > 1].ravel(), starts[lengths == 1]])
    bound = (np.array(ext["maxValues"]) - np.array(ext["minValues"])) / (2.0 * (2 ** ext["bits"] - 1))
    axis_err = np.abs(orig.astype(np.float64) - dequantize(ext, codes))

    json.dump({
        "codes_match": bool(np.array_equal(quantize(orig, ext), codes)),
        "offsets_match": bool(np.array_equal(np.diff(offsets), lengths)),
        "restored": restored.astype(np.float64).ravel().tolist(),
        "vertex_errors": stats(err),
        "endpoint_errors": stats(err[np.sort(ep_idx)]),
        "axis_bound_ok": bool((axis_err <= bound).all()),
        "bhattacharyya": overlap(orig, restored, bins),
    }, sys.stdout)


if __name__ == "__main__":
    main()
