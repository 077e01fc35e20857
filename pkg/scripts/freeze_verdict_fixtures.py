"""Regenerate the frozen infidelity histories used by the verdict tests."""
import json
from pathlib import Path

from qsl_control.krotov import KrotovConfig
from qsl_control.model import SystemSpec
from qsl_control.protocols import PROCESS_II, sudden_switch_time
from qsl_control.qsl import run_at

OUT = Path(__file__).resolve().parents[1] / "tests" / "data"


def main():
    spec = SystemSpec(3, (1.0, 1.0), 10.0)
    ts = sudden_switch_time(spec, PROCESS_II)
    for ratio in (0.8, 1.1):
        rec = run_at(spec, PROCESS_II, ratio * ts, KrotovConfig(max_iterations=5000))
        path = OUT / f"history_ratio_{ratio}.json"
        path.write_text(json.dumps({"ratio": ratio, "history": rec.infidelity_history}) + "\n")
        print(path, rec.iterations_run, rec.final_infidelity)


if __name__ == "__main__":
    main()
