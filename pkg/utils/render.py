# utils/render.py
"""
Configuration Rendering Utility for fk-separation

Draws two-dimensional bond configurations and filling-trace frames as PNG
images: open bonds dark, closed bonds faint, highlighted bonds (the
prefix S_k, the bond being added, a witness) in colour.
"""

import io
from typing import Callable, Iterable, Optional, Sequence, Tuple

from PIL import Image, ImageDraw

from operators.lattice import Bond, Configuration, Region, bounding_box, make_bond


class ConfigurationRenderer:
    """Render bond configurations on the square lattice."""

    # Pixels per lattice unit and margin around the bounding box
    CELL = 48
    MARGIN = 24
    BACKGROUND = (255, 255, 255)
    OPEN_COLOR = (30, 30, 30)
    CLOSED_COLOR = (215, 215, 215)
    PREFIX_COLOR = (52, 120, 200)
    CURRENT_COLOR = (220, 60, 40)
    WITNESS_COLOR = (40, 160, 90)
    SITE_RADIUS = 3
    THUMBNAIL_SIZE = (240, 240)
    IMAGE_FORMAT = "PNG"

    @staticmethod
    def _canvas(region: Region) -> Tuple[Image.Image, Callable]:
        if region.dimension != 2:
            raise ValueError(f"Rendering needs d = 2, got d = {region.dimension}")
        lo, hi = bounding_box(region.bonds)
        cell, margin = ConfigurationRenderer.CELL, ConfigurationRenderer.MARGIN
        width = (hi[0] - lo[0]) * cell + 2 * margin
        height = (hi[1] - lo[1]) * cell + 2 * margin

        # y grows upwards on the lattice, downwards on the image
        def to_pixel(site):
            return (margin + (site[0] - lo[0]) * cell, height - margin - (site[1] - lo[1]) * cell)

        img = Image.new("RGB", (max(width, 1), max(height, 1)), ConfigurationRenderer.BACKGROUND)
        return img, to_pixel

    @staticmethod
    def _to_bytes(img: Image.Image) -> bytes:
        output = io.BytesIO()
        img.save(output, format=ConfigurationRenderer.IMAGE_FORMAT, optimize=True)
        return output.getvalue()

    @staticmethod
    def render_configuration(
        config: Configuration,
        prefix: Iterable[Bond] = (),
        current: Optional[Bond] = None,
        witness: Iterable[Bond] = (),
    ) -> bytes:
        """
        Draw a configuration; prefix / current / witness bonds are coloured.

        Returns:
            PNG bytes
        """
        region = config.region
        img, to_pixel = ConfigurationRenderer._canvas(region)
        draw = ImageDraw.Draw(img)
        prefix = {make_bond(*b) for b in prefix}
        witness = {make_bond(*b) for b in witness}
        current = make_bond(*current) if current is not None else None

        for bond in region.bonds:
            if bond == current:
                color, width = ConfigurationRenderer.CURRENT_COLOR, 6
            elif bond in witness:
                color, width = ConfigurationRenderer.WITNESS_COLOR, 5
            elif bond in prefix:
                color, width = ConfigurationRenderer.PREFIX_COLOR, 5
            elif config.is_open(bond):
                color, width = ConfigurationRenderer.OPEN_COLOR, 4
            else:
                color, width = ConfigurationRenderer.CLOSED_COLOR, 2
            draw.line([to_pixel(bond[0]), to_pixel(bond[1])], fill=color, width=width)

        r = ConfigurationRenderer.SITE_RADIUS
        for site in region.vertices:
            x, y = to_pixel(site)
            draw.ellipse((x - r, y - r, x + r, y + r), fill=ConfigurationRenderer.OPEN_COLOR)

        return ConfigurationRenderer._to_bytes(img)

    @staticmethod
    def render_filling_frame(sequence, k: int) -> bytes:
        """
        Frame k of a filling trace: S_{k-1} in blue, the k-th bond in red,
        its certified neighborhood W in green.
        """
        if not 1 <= k <= len(sequence.order):
            raise ValueError(f"Frame {k} outside 1..{len(sequence.order)}")
        region = sequence.region
        step = sequence.steps[k - 1] if len(sequence.steps) >= k else None
        return ConfigurationRenderer.render_configuration(
            Configuration.all_closed(region),
            prefix=sequence.order[: k - 1],
            current=sequence.order[k - 1],
            witness=step.witness if step is not None else (),
        )

    @staticmethod
    def create_thumbnail(image_bytes: bytes, size: Sequence[int] = None) -> bytes:
        """Shrink a rendered frame to fit inside size, keeping the aspect ratio."""
        if size is None:
            size = ConfigurationRenderer.THUMBNAIL_SIZE
        img = Image.open(io.BytesIO(image_bytes))
        img.thumbnail(tuple(size), Image.Resampling.LANCZOS)
        return ConfigurationRenderer._to_bytes(img)
