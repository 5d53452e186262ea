"""The four commands chained end to end, driven in-process.

Everything here works identically from a shell:

    hexflood fetch-dem --bbox 0,0,0.02,0.02 --rows 25 --cols 25 \\
        --provider-url synthetic:demo --out dem.csv --cache-dir cache
    hexflood simulate --config scenario.json
    hexflood report --depths out/final.csv --threshold 0.05
    hexflood render --depths out/final.csv --out map.ppm --pixels-per-meter 2
"""

import json
from pathlib import Path

from hexflood.cli import main

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

# 1. fetch-dem: pull an elevation lattice and save it as a CSV raster.
#    The synthetic provider keeps this demo offline.
dem = OUT / "dem.csv"
code = main([
    "fetch-dem",
    "--bbox", "0,0,0.02,0.02",
    "--rows", "25", "--cols", "25",
    "--provider-url", "synthetic:demo",
    "--cache-dir", str(OUT / "cache"),
    "--out", str(dem),
])
print(f"fetch-dem exited {code}\n")

# 2. simulate: a scenario config names the terrain source, the storm,
#    and where outputs go. Files come out byte-identical for a given
#    config and seed.
scenario = {
    "terrain": {"file": {"path": str(dem), "format": "csv",
                         "origin": [0.0005, 0.0005], "extent": [30, 30]}},
    "rain_rate": 0.03,
    "rain_duration": 0.5,
    "equilibrate_duration": 1.0,
    "step_seconds": 30.0,
    "seed": 1,
    "output_dir": str(OUT / "run"),
}
config_path = OUT / "scenario.json"
config_path.write_text(json.dumps(scenario, indent=2), encoding="utf-8")
code = main(["simulate", "--config", str(config_path)])
print(f"simulate exited {code}\n")

# 3. report: statistics, ponded volume, and flood zones from any depth
#    CSV the simulation wrote.
code = main([
    "report",
    "--depths", str(OUT / "run" / "final.csv"),
    "--threshold", "0.01",
])
print(f"report exited {code}\n")

# 4. render: the same CSV as a shaded map.
code = main([
    "render",
    "--depths", str(OUT / "run" / "final.csv"),
    "--out", str(OUT / "final_map.ppm"),
    "--pixels-per-meter", "4",
])
print(f"render exited {code}")
print(f"\nartifacts under {OUT}")
