"""Run every analysis over the fixtures and validate the JSON against the report schema."""
import argparse
import json
import subprocess
import sys

try:
    import jsonschema
except ImportError:
    print("jsonschema not installed; skipping")
    sys.exit(77)

FIXTURES = [
    ("gap.pol", "ward.dom"),
    ("gap_complete.pol", "ward.dom"),
    ("conflict.pol", "ward.dom"),
    ("reach_ooa.pol", "ward.dom"),
    ("reach_always_na.pol", "ward.dom"),
    ("hospital.pol", "hospital.dom"),
]


def main() -> int:
    parser = argparse.ArgumentParser()
    parser.add_argument("--binary", required=True)
    parser.add_argument("--schema", required=True)
    parser.add_argument("--data", required=True)
    args = parser.parse_args()

    with open(args.schema) as f:
        schema = json.load(f)
    validator = jsonschema.Draft202012Validator(schema)

    checked = 0
    for policies, domains in FIXTURES:
        for task in ("gap", "conflict", "reachability"):
            for engine in ("native", "lp", "both"):
                cmd = [args.binary, "analyze", task,
                       "--policies", f"{args.data}/{policies}",
                       "--domains", f"{args.data}/{domains}",
                       "--engine", engine, "--format", "json", "--max-witnesses", "2"]
                run = subprocess.run(cmd, capture_output=True, text=True)
                if run.returncode not in (0, 3):
                    print(f"{' '.join(cmd)} exited {run.returncode}: {run.stderr}")
                    return 1
                errors = sorted(validator.iter_errors(json.loads(run.stdout)), key=str)
                if errors:
                    print(f"{policies} {task} {engine}: {errors[0].message}")
                    return 1
                checked += 1
    print(f"{checked} reports valid")
    return 0


if __name__ == "__main__":
    sys.exit(main())
