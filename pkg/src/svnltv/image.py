"""Color image containers, the saturation-value transform, and raster I/O.

Images are plain float64 arrays of shape (H, W, 3) with finite entries.
The nominal intensity range is [0, 1]; it is only enforced at the file
I/O boundary (8-bit codes map to value/255 on load, save clamps then
quantizes). The saturation-value transform is the fixed orthogonal
rotation that sends RGB to two chroma coordinates plus the achromatic
axis.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = [
    "SV_TRANSFORM",
    "ImageError",
    "UnreadableFileError",
    "UnsupportedFormatError",
    "CorruptImageError",
    "as_image",
    "rgb_to_sv",
    "sv_to_rgb",
    "clamp",
    "load_image",
    "save_image",
]

# Rows: chroma-1, chroma-2, achromatic axis. Orthogonal: SV_TRANSFORM @
# SV_TRANSFORM.T == I to machine precision.
SV_TRANSFORM = np.array(
    [
        [1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0), 0.0],
        [1.0 / np.sqrt(6.0), 1.0 / np.sqrt(6.0), -2.0 / np.sqrt(6.0)],
        [1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0), 1.0 / np.sqrt(3.0)],
    ]
)


class ImageError(Exception):
    """Base class for image I/O failures."""


class UnreadableFileError(ImageError):
    """The path cannot be opened or read."""


class UnsupportedFormatError(ImageError):
    """The file is readable but not one of the supported formats."""


class CorruptImageError(ImageError):
    """The file claims a supported format but its contents are broken."""


def as_image(arr) -> np.ndarray:
    """Validate and return ``arr`` as a float64 (H, W, 3) image.

    Raises ValueError on wrong shape, empty dimensions, or non-finite
    entries. Returns the input unchanged when it already is a valid
    float64 array (no copy).
    """
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim != 3 or a.shape[2] != 3:
        raise ValueError(f"expected shape (H, W, 3), got {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"image dimensions must be >= 1, got {a.shape[:2]}")
    if not np.all(np.isfinite(a)):
        raise ValueError("image contains NaN or Inf")
    return a


def rgb_to_sv(img) -> np.ndarray:
    """Rotate an RGB image into saturation-value coordinates.

    Per pixel: q1 = (r - g)/sqrt(2), q2 = (r + g - 2b)/sqrt(6),
    q3 = (r + g + b)/sqrt(3). The map is orthogonal, so per-pixel
    Euclidean norms are preserved.
    """
    img = as_image(img)
    return img @ SV_TRANSFORM.T


def sv_to_rgb(sv) -> np.ndarray:
    """Inverse of :func:`rgb_to_sv` (transpose of the orthogonal matrix)."""
    sv = as_image(sv)
    return sv @ SV_TRANSFORM


def clamp(img, lo: float = 0.0, hi: float = 1.0) -> np.ndarray:
    """Clip every intensity into [lo, hi]; in-range values pass through."""
    if lo > hi:
        raise ValueError(f"clamp bounds out of order: lo={lo} > hi={hi}")
    return np.clip(as_image(img), lo, hi)


_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def load_image(path) -> np.ndarray:
    """Load an 8-bit PNG or binary PPM (P6) as a float64 image in [0, 1].

    The format is sniffed from the file's magic bytes. Alpha channels
    are dropped; grayscale is replicated to three channels. 8-bit codes
    map to intensity by value / 255.
    """
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise UnreadableFileError(f"cannot read {path}: {exc}") from exc
    if raw.startswith(_PNG_MAGIC):
        return _decode_png(raw, path)
    if raw.startswith(b"P6"):
        return _decode_ppm(raw, path)
    raise UnsupportedFormatError(
        f"{path}: not a PNG or binary PPM (P6) file"
    )


def save_image(img, path) -> None:
    """Clamp to [0, 1], quantize by round(255 * v), and write PNG or PPM.

    The format is chosen by file extension (.png or .ppm).
    """
    img = clamp(img, 0.0, 1.0)
    codes = np.rint(img * 255.0).astype(np.uint8)
    path = Path(path)
    suffix = path.suffix.lower()
    if suffix == ".png":
        from PIL import Image

        try:
            Image.fromarray(codes, mode="RGB").save(path, format="PNG")
        except OSError as exc:
            raise UnreadableFileError(f"cannot write {path}: {exc}") from exc
    elif suffix in (".ppm", ".pnm"):
        header = f"P6\n{codes.shape[1]} {codes.shape[0]}\n255\n".encode("ascii")
        try:
            path.write_bytes(header + codes.tobytes())
        except OSError as exc:
            raise UnreadableFileError(f"cannot write {path}: {exc}") from exc
    else:
        raise UnsupportedFormatError(
            f"{path}: unsupported output extension {suffix!r} (use .png or .ppm)"
        )


def _decode_png(raw: bytes, path: Path) -> np.ndarray:
    import io

    from PIL import Image

    try:
        with Image.open(io.BytesIO(raw)) as im:
            rgb = im.convert("RGB")
            arr = np.asarray(rgb, dtype=np.float64)
    except Exception as exc:
        raise CorruptImageError(f"{path}: broken PNG data: {exc}") from exc
    return arr / 255.0


def _decode_ppm(raw: bytes, path: Path) -> np.ndarray:
    pos = 2  # past the P6 magic
    fields = []
    try:
        while len(fields) < 3:
            # skip whitespace and '#' comments between header fields
            while pos < len(raw) and raw[pos : pos + 1].isspace():
                pos += 1
            if pos < len(raw) and raw[pos : pos + 1] == b"#":
                while pos < len(raw) and raw[pos] != 0x0A:
                    pos += 1
                continue
            start = pos
            while pos < len(raw) and not raw[pos : pos + 1].isspace():
                pos += 1
            if pos == start:
                raise CorruptImageError(f"{path}: truncated PPM header")
            fields.append(int(raw[start:pos]))
        pos += 1  # single whitespace byte after maxval
    except ValueError as exc:
        raise CorruptImageError(f"{path}: malformed PPM header field") from exc
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise CorruptImageError(f"{path}: bad PPM dimensions {width}x{height}")
    if maxval != 255:
        raise UnsupportedFormatError(
            f"{path}: only maxval 255 PPM supported, got {maxval}"
        )
    expected = width * height * 3
    data = raw[pos : pos + expected]
    if len(data) < expected:
        raise CorruptImageError(
            f"{path}: PPM pixel data truncated ({len(data)} of {expected} bytes)"
        )
    arr = np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3)
    return arr.astype(np.float64) / 255.0
