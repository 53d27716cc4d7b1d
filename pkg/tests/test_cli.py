import json

import numpy as np
import pytest

from xdomrec import CfModel, Domain, InteractionSet, load_config, save_config
from xdomrec.cf import save_cf_model
from xdomrec.cli import main
from xdomrec.config import ExperimentConfig
from xdomrec.data import SplitDataset, write_split
from xdomrec.metrics import load_report

from oracles import oracle_f1, oracle_ndcg


def write_config(path, **fields):
    config = ExperimentConfig(**fields)
    save_config(config, path)
    return config


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """A small end-to-end workspace: synthetic data, splits, both checkpoints."""
    root = tmp_path_factory.mktemp("pipeline")
    assert main(["gen-synth", "--out", str(root / "data"), "--num-users", "60",
                 "--num-items", "40", "--feature-dim", "6", "--text-block", "2",
                 "--visual-block", "2", "--source-items-per-user", "8",
                 "--target-items-per-user", "4", "--feature-noise", "0.1",
                 "--seed", "1"]) == 0
    config_path = root / "config.json"
    write_config(
        config_path,
        source_interactions=str(root / "data/source/interactions.tsv"),
        target_interactions=str(root / "data/target/interactions.tsv"),
        source_user_textual=str(root / "data/source/user_textual.txt"),
        source_item_textual=str(root / "data/source/item_textual.txt"),
        source_item_visual=str(root / "data/source/item_visual.txt"),
        target_user_textual=str(root / "data/target/user_textual.txt"),
        target_item_textual=str(root / "data/target/item_textual.txt"),
        target_item_visual=str(root / "data/target/item_visual.txt"),
        source_split_dir=str(root / "splits/source"),
        target_split_dir=str(root / "splits/target"),
        output_dir=str(root / "out"),
        variant="fcf",
        feature_dim=6,
        latent_dim=3,
        source_lr=0.01, target_lr=0.01, classifier_lr=0.001, adversarial_lr=0.01,
        cf_epochs=8,
        epochs=3,
        runs=3,
        top_m=2,
        seed=4,
    )
    assert main(["split", "--config", str(config_path)]) == 0
    assert main(["train", "--config", str(config_path), "--domain", "source"]) == 0
    assert main(["train", "--config", str(config_path), "--domain", "target"]) == 0
    return root, config_path


class TestConfig:
    def test_roundtrip_identity(self, tmp_path):
        config = write_config(tmp_path / "c.json", variant="tcf", feature_dim=12,
                              latent_dim=5, ks=(2, 10), seed=9)
        assert load_config(tmp_path / "c.json") == config

    def test_unknown_field_rejected(self, tmp_path):
        (tmp_path / "c.json").write_text('{"no_such_field": 1}')
        with pytest.raises(ValueError, match="no_such_field"):
            load_config(tmp_path / "c.json")

    def test_bad_k_list_rejected(self):
        with pytest.raises(ValueError):
            ExperimentConfig(ks=(10, 5))
        with pytest.raises(ValueError):
            ExperimentConfig(ks=())

    def test_flag_overrides_win(self, tmp_path):
        path = tmp_path / "it.tsv"
        path.write_text("".join(f"u{u}\ti{(u * 3 + j) % 9}\n"
                                for u in range(10) for j in range(3)))
        config_path = tmp_path / "c.json"
        write_config(config_path, source_interactions=str(path),
                     source_split_dir=str(tmp_path / "s"), seed=1)
        assert main(["split", "--config", str(config_path), "--domain", "source",
                     "--seed", "99"]) == 0
        manifest = json.loads((tmp_path / "s/manifest.json").read_text())
        assert manifest["split_seed"] == 99


class TestSplitCommand:
    def test_ratio_on_1000_positives(self, tmp_path):
        path = tmp_path / "it.tsv"
        with path.open("w") as fh:
            for u in range(100):
                for j in range(10):
                    fh.write(f"u{u}\ti{(u + j * 7) % 50}\n")
        config_path = tmp_path / "c.json"
        write_config(config_path, source_interactions=str(path),
                     source_split_dir=str(tmp_path / "s"), seed=3)
        assert main(["split", "--config", str(config_path), "--domain", "source"]) == 0
        manifest = json.loads((tmp_path / "s/manifest.json").read_text())
        assert manifest["sizes"] == {"train": 800, "validation": 100, "test": 100}

    def test_same_seed_byte_identical(self, tmp_path):
        path = tmp_path / "it.tsv"
        path.write_text("".join(f"u{u}\ti{(u * 3 + j) % 9}\n"
                                for u in range(10) for j in range(3)))
        outputs = []
        for name in ("a", "b"):
            config_path = tmp_path / f"{name}.json"
            write_config(config_path, source_interactions=str(path),
                         source_split_dir=str(tmp_path / name), seed=8)
            assert main(["split", "--config", str(config_path),
                         "--domain", "source"]) == 0
            outputs.append(b"".join(
                (tmp_path / name / f).read_bytes()
                for f in ("train.tsv", "validation.tsv", "test.tsv", "manifest.json")))
        assert outputs[0] == outputs[1]

    def test_missing_input_path_fails(self, tmp_path, capsys):
        config_path = tmp_path / "c.json"
        write_config(config_path, source_interactions=str(tmp_path / "absent.tsv"),
                     source_split_dir=str(tmp_path / "s"))
        assert main(["split", "--config", str(config_path), "--domain", "source"]) == 1
        assert "does not exist" in capsys.readouterr().err


class TestTrainCommand:
    def test_fcf_missing_visual_file_names_field(self, pipeline, capsys):
        root, config_path = pipeline
        config = load_config(config_path)
        broken = config.with_overrides()
        object.__setattr__(broken, "source_item_visual", "")
        save_config(broken, root / "broken.json")
        assert main(["train", "--config", str(root / "broken.json"),
                     "--domain", "source"]) == 1
        assert "source_item_visual" in capsys.readouterr().err

    def test_plainmf_warns_about_feature_paths(self, pipeline, tmp_path, capsys):
        root, config_path = pipeline
        assert main(["train", "--config", str(config_path), "--domain", "source",
                     "--variant", "plainmf", "--cf-epochs", "2",
                     "--output-dir", str(tmp_path / "out")]) == 0
        err = capsys.readouterr().err
        assert "ignores feature paths" in err

    def test_loss_log_written_and_trend_non_increasing(self, pipeline, tmp_path):
        root, config_path = pipeline
        assert main(["train", "--config", str(config_path), "--domain", "source",
                     "--cf-epochs", "60", "--output-dir", str(tmp_path / "out")]) == 0
        log = (tmp_path / "out/source_fcf_loss.tsv").read_text().strip().split("\n")
        losses = [float(line.split("\t")[1]) for line in log]
        assert len(losses) == 60
        window = max(1, len(losses) // 10)
        windows = [np.mean(losses[i:i + window])
                   for i in range(0, len(losses) - window + 1, window)]
        assert all(windows[-1] <= w + 1e-9 for w in windows[:-1])


class TestAdaptCommand:
    def test_adapt_aggregates_best_runs(self, pipeline):
        root, config_path = pipeline
        assert main(["adapt", "--config", str(config_path)]) == 0
        per_run = [load_report(root / f"out/adapt_report_run{r}.json") for r in range(3)]
        aggregated = load_report(root / "out/adapt_report.json")
        best_two = sorted(per_run, key=lambda r: -r.per_k[10].f1)[:2]
        for k, metrics in aggregated.per_k.items():
            expected = sum(r.per_k[k].f1 for r in best_two) / 2
            assert metrics.f1 == pytest.approx(expected, rel=1e-12)
        for name in ("adapted_source.ckpt", "adapted_target.ckpt",
                     "user_classifier.txt", "item_classifier.txt", "adapt_runs.tsv"):
            assert (root / "out" / name).exists()

    def test_missing_checkpoint_fails(self, pipeline, capsys):
        root, config_path = pipeline
        assert main(["adapt", "--config", str(config_path),
                     "--output-dir", str(root / "empty_out")]) == 1
        assert "missing CF checkpoint" in capsys.readouterr().err


class TestEvalCommand:
    def golden_workspace(self, tmp_path):
        """3 users x 5 items, hand-placed scores; expected metrics from oracles."""
        item_scores = [0.9, 0.2, 0.4, 0.1, 0.3]
        model = CfModel(user_latent=np.ones((3, 1)),
                        item_latent=np.array([[s] for s in item_scores]))
        train = InteractionSet(3, 5, [(0, 1), (1, 0)], Domain.TARGET)
        test = InteractionSet(3, 5, [(0, 0), (1, 2), (2, 4)], Domain.TARGET)
        validation = InteractionSet(3, 5, [(2, 0)], Domain.TARGET)
        write_split(SplitDataset(train, validation, test, split_seed=0),
                    tmp_path / "split")
        save_cf_model(model, tmp_path / "golden.ckpt")
        config_path = tmp_path / "c.json"
        write_config(config_path, variant="plainmf", latent_dim=1,
                     target_split_dir=str(tmp_path / "split"),
                     output_dir=str(tmp_path / "out"), ks=(2, 5, 10, 15, 20))
        rankings = {0: [0, 2, 4, 3], 1: [2, 4, 1, 3], 2: [0, 2, 4, 1, 3]}
        relevant = {0: {0}, 1: {2}, 2: {4}}
        return config_path, tmp_path / "golden.ckpt", rankings, relevant

    def test_golden_fixture_expected_report(self, tmp_path, capsys):
        config_path, ckpt, rankings, relevant = self.golden_workspace(tmp_path)
        assert main(["eval", "--config", str(config_path),
                     "--checkpoint", str(ckpt)]) == 0
        out = capsys.readouterr().out
        assert "f1@2" in out and "f1@20" in out  # k list surfaces verbatim
        report = load_report(tmp_path / "out/eval_target_report.json")
        for k in (2, 5, 10, 15, 20):
            expected_f1 = np.mean([
                oracle_f1(rankings[u][:k], relevant[u], k) for u in range(3)])
            expected_ndcg = np.mean([
                oracle_ndcg(rankings[u][:k], relevant[u], k) for u in range(3)])
            assert report.per_k[k].f1 == pytest.approx(expected_f1, abs=1e-12)
            assert report.per_k[k].ndcg == pytest.approx(expected_ndcg, abs=1e-12)
        assert report.num_users_evaluated == 3

    def test_corrupted_checkpoint_nonzero_exit(self, tmp_path, capsys):
        config_path, ckpt, _, _ = self.golden_workspace(tmp_path)
        ckpt.write_text("cfmodel plainmf 3 5 0 1\ngarbage\n")
        assert main(["eval", "--config", str(config_path),
                     "--checkpoint", str(ckpt)]) == 1
        assert "corrupt checkpoint" in capsys.readouterr().err

    def test_eval_after_adapt_uses_adapted_checkpoint(self, pipeline, capsys):
        root, config_path = pipeline
        if not (root / "out/adapted_target.ckpt").exists():
            assert main(["adapt", "--config", str(config_path)]) == 0
        assert main(["eval", "--config", str(config_path)]) == 0
        assert (root / "out/eval_target_report.json").exists()
