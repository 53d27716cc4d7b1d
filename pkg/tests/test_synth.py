import numpy as np
import pytest

from xdomrec import Domain, SynthParams, generate_domain_pair, write_synthetic_dataset
from xdomrec.data import load_feature_matrix, load_interactions_with_ids


SMALL = SynthParams(num_users=40, num_items=25, feature_dim=6, text_block=2,
                    visual_block=2, source_items_per_user=6, target_items_per_user=3,
                    seed=5)


class TestGenerateDomainPair:
    def test_deterministic(self):
        a = generate_domain_pair(SMALL)
        b = generate_domain_pair(SMALL)
        for d in Domain:
            assert a[d].interactions == b[d].interactions
            assert np.array_equal(a[d].user_textual.values, b[d].user_textual.values)
            assert np.array_equal(a[d].item_visual.values, b[d].item_visual.values)

    def test_shapes(self):
        domains = generate_domain_pair(SMALL)
        for d in Domain:
            assert domains[d].interactions.num_users == 40
            assert domains[d].interactions.num_items == 25
            assert domains[d].user_textual.values.shape == (40, 6)
            assert domains[d].item_textual.values.shape == (25, 6)
            assert domains[d].item_visual.values.shape == (25, 6)

    def test_every_item_covered(self):
        domains = generate_domain_pair(SMALL)
        for d in Domain:
            assert len(set(domains[d].interactions.pairs[:, 1].tolist())) == 25

    def test_density_asymmetry(self):
        domains = generate_domain_pair(SMALL)
        source = domains[Domain.SOURCE].interactions.num_positives
        target = domains[Domain.TARGET].interactions.num_positives
        assert source > target

    def test_domain_tags(self):
        domains = generate_domain_pair(SMALL)
        assert domains[Domain.SOURCE].interactions.domain_tag is Domain.SOURCE
        assert domains[Domain.TARGET].interactions.domain_tag is Domain.TARGET

    def test_invalid_params_rejected(self):
        with pytest.raises(ValueError):
            SynthParams(num_users=0)
        with pytest.raises(ValueError):
            SynthParams(num_items=5, source_items_per_user=9)


class TestWriteSyntheticDataset:
    def test_written_files_align_with_reload(self, tmp_path):
        out = write_synthetic_dataset(SMALL, tmp_path / "data")
        domains = generate_domain_pair(SMALL)
        for d in Domain:
            ddir = out / d.name.lower()
            its, user_ids, item_ids = load_interactions_with_ids(
                ddir / "interactions.tsv", d)
            assert its.num_users == 40 and its.num_items == 25
            # row r of the written item features must describe the item with
            # dense index r after reloading
            item_feats = load_feature_matrix(ddir / "item_textual.txt",
                                             expected_rows=25)
            original = domains[d].item_textual.values
            for dense_index, raw_id in enumerate(item_ids):
                original_index = int(raw_id[1:])
                np.testing.assert_allclose(item_feats.values[dense_index],
                                           original[original_index], rtol=1e-12)

    def test_user_rows_are_identity_order(self, tmp_path):
        out = write_synthetic_dataset(SMALL, tmp_path / "data")
        _, user_ids, _ = load_interactions_with_ids(
            out / "source" / "interactions.tsv")
        assert user_ids == [f"u{u:05d}" for u in range(40)]

    def test_id_lookup_files(self, tmp_path):
        out = write_synthetic_dataset(SMALL, tmp_path / "data")
        users = (out / "target" / "user_ids.txt").read_text().splitlines()
        items = (out / "target" / "item_ids.txt").read_text().splitlines()
        assert len(users) == 40 and len(items) == 25

    def test_byte_determinism(self, tmp_path):
        out_a = write_synthetic_dataset(SMALL, tmp_path / "a")
        out_b = write_synthetic_dataset(SMALL, tmp_path / "b")
        for rel in ("source/interactions.tsv", "source/user_textual.txt",
                    "target/item_visual.txt", "synth_manifest.json"):
            assert (out_a / rel).read_bytes() == (out_b / rel).read_bytes()
