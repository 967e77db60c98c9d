"""Run every shipped program through the CLI into out/<name>/."""

import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def main():
    out_root = ROOT / "out"
    failures = 0
    for prog in sorted((ROOT / "programs").glob("*.kae")):
        out = out_root / prog.stem
        args = [sys.executable, "-m", "kaemsim.cli", "run", str(prog),
                "-o", str(out), "--emit", "all", "--lna"]
        if "neutralization" in prog.name:
            args.append("--device")
        print("$", " ".join(args[2:]))
        rc = subprocess.run(args).returncode
        if rc != 0:
            failures += 1
            print(f"  FAILED (exit {rc})")
    sys.exit(1 if failures else 0)


if __name__ == "__main__":
    main()
