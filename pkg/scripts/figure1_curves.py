"""Write both panels of the limiting standard-deviation curves as CSV.

Usage: python scripts/figure1_curves.py [OUTDIR]
"""

import sys
from pathlib import Path

from conformal_ridge.asymptotics import curve_table, left_panel_grid, right_panel_grid


def main(outdir: str = ".") -> None:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    for name, grid in (("left", left_panel_grid()), ("right", right_panel_grid())):
        path = out / f"curves_{name}.csv"
        path.write_text(curve_table(grid).to_csv())
        print(f"wrote {path}")


if __name__ == "__main__":
    main(*sys.argv[1:2])
