"""Regenerate the embedded fonts under crates/core/fonts/.

poster-mono-test.ttf: monospace, unitsPerEm 1000, every advance 600,
ascent 800, descent 200, line gap 0 (line height = 1 em).
poster-sans.ttf: bold sans subset for display text.

Both are derived from DejaVu (Bitstream Vera license, see fonts/LICENSE-DejaVu.txt)
and renamed as that license requires.
"""
import sys
from pathlib import Path

from fontTools import subset
from fontTools.ttLib import TTFont
from fontTools.ttLib.scaleUpem import scale_upem

SRC = Path("/usr/share/fonts/truetype/dejavu")
OUT = Path(__file__).resolve().parent.parent / "crates" / "core" / "fonts"

UNICODES = list(range(0x20, 0x7F)) + list(range(0xA0, 0x180))


def do_subset(font):
    opts = subset.Options()
    opts.hinting = False
    opts.layout_features = []
    opts.name_IDs = [0, 1, 2, 3, 4, 5, 6]
    opts.notdef_outline = True
    opts.drop_tables += ["GSUB", "GPOS", "GDEF", "kern", "FFTM"]
    sub = subset.Subsetter(opts)
    sub.populate(unicodes=UNICODES)
    sub.subset(font)


def rename(font, family, style):
    name = font["name"]
    full = f"{family} {style}"
    ps = full.replace(" ", "-")
    for rec in list(name.names):
        if rec.nameID in (1, 16):
            rec.string = family
        elif rec.nameID in (2, 17):
            rec.string = style
        elif rec.nameID in (3,):
            rec.string = ps
        elif rec.nameID == 4:
            rec.string = full
        elif rec.nameID == 6:
            rec.string = ps


def set_vertical(font, ascent, descent, gap):
    hhea = font["hhea"]
    hhea.ascent, hhea.descent, hhea.lineGap = ascent, -descent, gap
    os2 = font["OS/2"]
    os2.sTypoAscender, os2.sTypoDescender, os2.sTypoLineGap = ascent, -descent, gap
    os2.usWinAscent, os2.usWinDescent = ascent, descent


def build_mono():
    font = TTFont(SRC / "DejaVuSansMono-Bold.ttf")
    do_subset(font)
    scale_upem(font, 1000)
    hmtx = font["hmtx"]
    glyf = font["glyf"]
    for name in font.getGlyphOrder():
        adv, lsb = hmtx[name]
        g = glyf[name]
        g.expand(glyf)
        shift = (600 - adv) // 2
        # composites follow their (already shifted) components
        if g.numberOfContours > 0 and shift:
            g.coordinates.translate((shift, 0))
        if g.numberOfContours != 0:
            g.recalcBounds(glyf)
            lsb = g.xMin
        hmtx[name] = (600, lsb)
    font["hhea"].advanceWidthMax = 600
    font["OS/2"].xAvgCharWidth = 600
    set_vertical(font, 800, 200, 0)
    rename(font, "Poster Mono Test", "Bold")
    font.save(OUT / "poster-mono-test.ttf")


def build_sans():
    font = TTFont(SRC / "DejaVuSans-Bold.ttf")
    do_subset(font)
    rename(font, "Poster Sans", "Bold")
    font.save(OUT / "poster-sans.ttf")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    build_mono()
    build_sans()
    sys.exit(0)
