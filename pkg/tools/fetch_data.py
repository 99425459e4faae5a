"""Fetch the MovieLens atomic files bundled inside two PyPI wheels.

    python3 tools/fetch_data.py [target_dir]

Writes ``ml-100k.inter`` and ``ml-1m.inter`` to ``target_dir`` (default
``$AIPROBS_DATA_DIR`` or ``/root/data``). LastFM has no such mirror; place a
``lastfm.inter`` file there by hand.
"""

import os
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

SOURCES = {
    "ml-100k.inter": ("recbole==1.2.1", "recbole/dataset_example/ml-100k/ml-100k.inter"),
    "ml-1m.inter": ("recbole_cdr==0.1.0", "recbole_cdr/dataset_example/ml-1m/ml-1m.inter"),
}


def main(argv):
    target = Path(argv[1] if len(argv) > 1 else os.environ.get("AIPROBS_DATA_DIR", "/root/data"))
    target.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        for name, (requirement, member) in SOURCES.items():
            if (target / name).exists():
                print(f"{name}: present")
                continue
            subprocess.run([sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", tmp, requirement],
                           check=True)
            wheel = next(p for p in Path(tmp).glob("*.whl") if p.name.lower().startswith(requirement.split("==")[0]))
            with zipfile.ZipFile(wheel) as zf:
                (target / name).write_bytes(zf.read(member))
            print(f"{name}: written to {target}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
