import json
from pathlib import Path

import pytest

from lurekit.cli import build_parser, main


class TestParsing:
    def test_eval_defaults_match_protocol(self):
        ap = build_parser()
        args = ap.parse_args(["eval", "--model", "m.json", "--data", "d.jsonl",
                              "--report", "r.csv"])
        assert args.terrains == 5
        assert args.robots == 20

    def test_lure_default_hold_prob(self):
        from lurekit.training import TrainConfig
        assert TrainConfig().hold_prob == 0.5
        ap = build_parser()
        args = ap.parse_args(["train", "--algo", "lure", "--data", "d.jsonl",
                              "--out", "m.json"])
        assert args.hold_prob is None         # falls back to the 0.5 default

    def test_unknown_flag_exits_2(self, capsys):
        with pytest.raises(SystemExit) as ei:
            build_parser().parse_args(["eval", "--frobnicate"])
        assert ei.value.code == 2

    def test_missing_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as ei:
            build_parser().parse_args([])
        assert ei.value.code == 2


class TestPipeline:
    def test_collect_is_seed_reproducible(self, tmp_path):
        for name in ("a", "b"):
            rc = main(["collect", "--scenario", "come_here", "--episodes", "2",
                       "--seed", "7", "--out", str(tmp_path / f"{name}.jsonl"),
                       "--scene-dir", str(tmp_path / "scenes")])
            assert rc == 0
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()

    def test_collect_train_eval_roundtrip(self, tmp_path):
        scenes = str(tmp_path / "scenes")
        data = str(tmp_path / "d.jsonl")
        model = str(tmp_path / "m.json")
        report = str(tmp_path / "r.csv")
        assert main(["collect", "--scenario", "go_there", "--episodes", "2",
                     "--seed", "3", "--out", data, "--scene-dir", scenes]) == 0
        assert main(["train", "--algo", "bc", "--data", data, "--out", model,
                     "--scene-dir", scenes, "--epochs", "2"]) == 0
        assert main(["eval", "--model", model, "--data", data,
                     "--terrains", "1", "--robots", "1", "--report", report,
                     "--scene-dir", scenes]) == 0
        lines = Path(report).read_text().strip().splitlines()
        assert len(lines) == 2 and lines[1].startswith("go_there")

    def test_train_unknown_data_exits_1(self, tmp_path):
        rc = main(["train", "--algo", "bc", "--data", str(tmp_path / "no.jsonl"),
                   "--out", str(tmp_path / "m.json"),
                   "--scene-dir", str(tmp_path)])
        assert rc == 1

    def test_adapt_smoke(self, tmp_path):
        scenes = str(tmp_path / "scenes")
        data = str(tmp_path / "d.jsonl")
        model = str(tmp_path / "m.json")
        out = str(tmp_path / "m2.json")
        main(["collect", "--scenario", "come_here", "--episodes", "2",
              "--seed", "5", "--out", data, "--scene-dir", scenes])
        main(["train", "--algo", "bc", "--data", data, "--out", model,
              "--scene-dir", scenes, "--epochs", "2"])
        new = str(tmp_path / "new.jsonl")
        main(["collect", "--scenario", "come_here", "--episodes", "1",
              "--seed", "9", "--out", new, "--scene-dir", scenes,
              "--style-rotation", "20", "--style-table", "paraphrases_alt"])
        rc = main(["adapt", "--model", model, "--data", new, "--out", out,
                   "--scene-dir", scenes, "--epochs", "2"])
        assert rc == 0
        assert json.loads(Path(out).read_text())["layers"] == [342, 128, 128, 3]
