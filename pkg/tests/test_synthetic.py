import json
from collections import Counter

import pytest

from chronodivide.corpus import SENTENCE_TERMINATORS, load_corpus
from chronodivide.errors import ConfigError
from chronodivide.synthetic import (
    SyntheticSpec,
    alphabet_symbols,
    generate_synthetic,
    make_shifted_distributions,
)


def small_spec(**overrides):
    da, db, _ = make_shifted_distributions(20, 4, 2.0)
    base = dict(
        alphabet_size=20,
        dist_a=da,
        dist_b=db,
        chars_per_chapter=400,
        chapters_a=4,
        chapters_b=3,
        divide_position=4,
        seed=5,
    )
    base.update(overrides)
    return SyntheticSpec(**base)


class TestMakeShiftedDistributions:
    def test_distributions_are_normalized(self):
        da, db, shifted = make_shifted_distributions(200, 10, 2.0)
        assert sum(da) == pytest.approx(1.0, abs=1e-12)
        assert sum(db) == pytest.approx(1.0, abs=1e-12)
        assert len(shifted) == 10

    def test_shifted_symbols_scaled(self):
        da, db, shifted = make_shifted_distributions(50, 5, 3.0)
        ratios = [db[i] / da[i] for i in shifted]
        # renormalization damps the nominal factor slightly but uniformly
        assert all(r == pytest.approx(ratios[0], rel=1e-9) for r in ratios)
        assert ratios[0] > 2.0

    def test_identity_when_factor_one(self):
        da, db, _ = make_shifted_distributions(30, 3, 1.0)
        assert da == db

    def test_bad_arguments(self):
        with pytest.raises(ConfigError):
            make_shifted_distributions(10, 0, 2.0)
        with pytest.raises(ConfigError):
            make_shifted_distributions(10, 3, -1.0)


class TestGenerateSynthetic:
    def test_layout_and_manifest(self, tmp_path):
        out = generate_synthetic(small_spec(), tmp_path / "corpus")
        chapters = sorted((out / "chapters").glob("*.txt"))
        assert len(chapters) == 7
        assert (out / "lexicon.txt").exists()
        manifest = json.loads((out / "ground_truth.json").read_text())
        assert manifest["divide_position"] == 4
        assert len(manifest["differing_symbol_indices"]) == 4

    def test_deterministic(self, tmp_path):
        a = generate_synthetic(small_spec(), tmp_path / "a")
        b = generate_synthetic(small_spec(), tmp_path / "b")
        for pa, pb in zip(
            sorted((a / "chapters").iterdir()), sorted((b / "chapters").iterdir())
        ):
            assert pa.read_bytes() == pb.read_bytes()

    def test_content_symbol_count(self, tmp_path):
        out = generate_synthetic(small_spec(), tmp_path / "c")
        text = (out / "chapters" / "0000.txt").read_text(encoding="utf-8")
        content = [c for c in text if c not in SENTENCE_TERMINATORS]
        assert len(content) == 400

    def test_loadable_as_corpus(self, tmp_path):
        out = generate_synthetic(small_spec(), tmp_path / "d")
        docs = load_corpus(out / "chapters")
        assert [d.ordinal for d in docs] == list(range(7))

    def test_null_corpus_identical_distributions(self, tmp_path):
        da, _, _ = make_shifted_distributions(20, 4, 2.0)
        spec = small_spec(dist_b=da)
        out = generate_synthetic(spec, tmp_path / "e")
        manifest = json.loads((out / "ground_truth.json").read_text())
        assert manifest["differing_symbol_indices"] == []

    def test_sharp_transition_shifts_frequencies(self, tmp_path):
        da, db, shifted = make_shifted_distributions(20, 4, 4.0)
        spec = small_spec(
            dist_a=da, dist_b=db, chars_per_chapter=5000,
            chapters_a=2, chapters_b=2, divide_position=2, seed=9,
        )
        out = generate_synthetic(spec, tmp_path / "f")
        symbols = alphabet_symbols(20)
        texts = [
            (out / "chapters" / f"{k:04d}.txt").read_text(encoding="utf-8")
            for k in range(4)
        ]
        counts = [Counter(t) for t in texts]
        marker = symbols[shifted[0]]
        before = counts[0][marker] + counts[1][marker]
        after = counts[2][marker] + counts[3][marker]
        assert after > 2 * before

    def test_linear_transition_is_gradual(self, tmp_path):
        da, db, shifted = make_shifted_distributions(20, 4, 6.0)
        spec = small_spec(
            dist_a=da, dist_b=db, chars_per_chapter=20000,
            chapters_a=3, chapters_b=3, divide_position=3, seed=10,
            transition="linear",
        )
        out = generate_synthetic(spec, tmp_path / "g")
        symbols = alphabet_symbols(20)
        marker = symbols[shifted[0]]
        counts = [
            Counter((out / "chapters" / f"{k:04d}.txt").read_text(encoding="utf-8"))[marker]
            for k in range(6)
        ]
        assert counts[-1] > counts[0]
        # middle chapters sit between the extremes rather than jumping
        mid = sum(counts[2:4]) / 2
        assert counts[0] < mid < counts[-1]

    def test_invalid_specs(self):
        with pytest.raises(ConfigError):
            small_spec(divide_position=3)
        with pytest.raises(ConfigError):
            small_spec(dist_a=(0.5,) * 3)
        with pytest.raises(ConfigError):
            small_spec(transition="smooth")
        with pytest.raises(ConfigError):
            small_spec(chapters_b=0)
