"""Image decoding and per-task model input preparation.

Classifier inputs are plain bilinear squashes to 224/256; the detector gets
an aspect-preserving letterbox onto a 640x640 gray canvas with the forward
geometry recorded so boxes can be mapped back exactly.
"""

import io
from dataclasses import dataclass

import cv2
import numpy as np
from PIL import Image, ImageOps

from .errors import CorruptImage, DegenerateBox, UnsupportedColorModel

PAD_GRAY = 114  # letterbox fill value, uint8

_DECODABLE_MODES = {"1", "L", "LA", "P", "RGB", "RGBA"}


@dataclass(frozen=True)
class NormSpec:
    mean: tuple[float, float, float] = (0.0, 0.0, 0.0)
    std: tuple[float, float, float] = (1.0, 1.0, 1.0)


IMAGENET_NORM = NormSpec(mean=(0.485, 0.456, 0.406), std=(0.229, 0.224, 0.225))


@dataclass(frozen=True)
class LetterboxTransform:
    scale: float
    pad_x: float
    pad_y: float


def decode_image(data: bytes) -> np.ndarray:
    """Decode JPEG/PNG bytes to an HxWx3 uint8 RGB raster.

    EXIF orientation is applied; grayscale is replicated across channels.
    """
    try:
        im = Image.open(io.BytesIO(data))
        im.load()
    except Exception as e:
        raise CorruptImage(f"image failed to decode: {e}")
    if im.mode not in _DECODABLE_MODES:
        raise UnsupportedColorModel(f"unsupported color model: {im.mode}")
    im = ImageOps.exif_transpose(im)
    if im.mode != "RGB":
        im = im.convert("RGB")
    return np.asarray(im, dtype=np.uint8)


def resize_normalize(img: np.ndarray, side: int, norm: NormSpec) -> np.ndarray:
    """Squash-resize to side x side (aspect not preserved), scale to [0,1],
    then per-channel (x - mean) / std. Returns CHW float32."""
    resized = cv2.resize(img, (side, side), interpolation=cv2.INTER_LINEAR)
    x = resized.astype(np.float32) / 255.0
    mean = np.asarray(norm.mean, dtype=np.float32)
    std = np.asarray(norm.std, dtype=np.float32)
    x = (x - mean) / std
    return np.ascontiguousarray(x.transpose(2, 0, 1))


def letterbox(img: np.ndarray, side: int = 640) -> tuple[np.ndarray, LetterboxTransform]:
    """Aspect-preserving resize centered on a side x side gray canvas.

    Returns the [0,1]-scaled CHW tensor and the exact forward geometry.
    The recorded pads are the un-rounded centering offsets; pixel placement
    rounds to the nearest integer cell.
    """
    h, w = img.shape[:2]
    scale = min(side / w, side / h)
    new_w, new_h = int(round(w * scale)), int(round(h * scale))
    if (new_w, new_h) != (w, h):
        resized = cv2.resize(img, (new_w, new_h), interpolation=cv2.INTER_LINEAR)
    else:
        resized = img
    pad_x = (side - scale * w) / 2.0
    pad_y = (side - scale * h) / 2.0
    canvas = np.full((side, side, 3), PAD_GRAY, dtype=np.uint8)
    left, top = int(round(pad_x)), int(round(pad_y))
    canvas[top:top + new_h, left:left + new_w] = resized
    tensor = np.ascontiguousarray(
        canvas.astype(np.float32).transpose(2, 0, 1) / 255.0)
    return tensor, LetterboxTransform(scale=scale, pad_x=pad_x, pad_y=pad_y)


def unletterbox_box(box: tuple[float, float, float, float],
                    t: LetterboxTransform,
                    orig_w: int, orig_h: int) -> tuple[float, float, float, float]:
    """Map an (x1,y1,x2,y2) box from the 640-frame back to original pixels,
    clipping to the image. Raises DegenerateBox if clipping collapses it."""
    x1, y1, x2, y2 = box
    x1 = (x1 - t.pad_x) / t.scale
    x2 = (x2 - t.pad_x) / t.scale
    y1 = (y1 - t.pad_y) / t.scale
    y2 = (y2 - t.pad_y) / t.scale
    x1, x2 = max(0.0, min(x1, orig_w)), max(0.0, min(x2, orig_w))
    y1, y2 = max(0.0, min(y1, orig_h)), max(0.0, min(y2, orig_h))
    if not (x1 < x2 and y1 < y2):
        raise DegenerateBox(f"box collapsed after unletterbox/clip: {(x1, y1, x2, y2)}")
    return (x1, y1, x2, y2)
