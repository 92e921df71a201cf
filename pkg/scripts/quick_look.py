#!/usr/bin/env python3
"""Print the aggregate block of one or more run summaries side by side.

Usage: scripts/quick_look.py out/typicality out/gaps ...
"""
import argparse
import json
import pathlib


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("run_dirs", nargs="+", type=pathlib.Path)
    args = parser.parse_args()
    for run_dir in args.run_dirs:
        summaries = sorted(run_dir.glob("*_summary.json"))
        if not summaries:
            print(f"{run_dir}: no summary found")
            continue
        for path in summaries:
            data = json.loads(path.read_text())
            print(f"--- {path} (hash {data['content_hash'][:12]})")
            print(json.dumps(data["aggregates"], indent=2, sort_keys=True))
            if any(v for v in data.get("flags", {}).values()):
                print("flags:", json.dumps(data["flags"], sort_keys=True))


if __name__ == "__main__":
    main()
