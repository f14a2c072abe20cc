"""Pure numpy versions of the enumeration kernels (same signatures as ``_enum_cy``)."""
import numpy as np

_BLOCK_ELEMENTS = 1 << 20


def _block_norms(low, high_block):
    diff = high_block[:, None, :] + low[None, :, :]
    return np.einsum("hld,hld->hl", diff, diff)


def row_maxima(low, high, num_threads=1):
    low = np.ascontiguousarray(low, dtype=np.float64)
    high = np.ascontiguousarray(high, dtype=np.float64)
    step = max(1, _BLOCK_ELEMENTS // max(1, low.shape[0]))
    out = np.empty(high.shape[0], dtype=np.float64)
    for start in range(0, high.shape[0], step):
        out[start:start + step] = _block_norms(low, high[start:start + step]).max(axis=1)
    return out


def collect_rows(low, high, rows, threshold, k_low):
    low = np.ascontiguousarray(low, dtype=np.float64)
    codes, values = [], []
    for h in np.asarray(rows, dtype=np.int64):
        norms = _block_norms(low, high[h:h + 1])[0]
        hit = np.flatnonzero(norms >= threshold)
        codes.append(hit.astype(np.int64) | (np.int64(h) << k_low))
        values.append(norms[hit])
    if not codes:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    return np.concatenate(codes), np.concatenate(values)
