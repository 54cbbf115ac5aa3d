import json
import logging
import random

import pytest

from helpers import make_vocab
from pubtagger import (
    AlignmentError,
    CompilerPolicy,
    ConfigError,
    DataError,
    Rule,
    ScoreVector,
    ScorerDescriptor,
    TagCompiler,
    compile_tags,
    reliable_labels,
    tune_thresholds,
)

# prevalence order: Journal Article > Review > Letter > Editorial
VOCAB = make_vocab(
    {"Journal Article": 100, "Review": 50, "Letter": 20, "Editorial": 10},
    base_label="Journal Article",
)


def sv(scores, cid="c1"):
    return ScoreVector(citation_id=cid, scores=scores)


class TestCompileTags:
    def test_single_label_above_threshold(self):
        result = compile_tags(sv({"Review": 0.95, "Letter": 0.20}), CompilerPolicy(), VOCAB)
        assert result.tags == ["Review"]

    def test_prevalence_ordered_truncation(self):
        scores = sv({"Journal Article": 0.9, "Review": 0.8, "Letter": 0.7})
        result = compile_tags(scores, CompilerPolicy(max_tags=2), VOCAB)
        assert result.tags == ["Journal Article", "Review"]

    def test_fallback_when_nothing_survives(self):
        scores = sv({"Review": 0.1, "Letter": 0.2})
        result = compile_tags(scores, CompilerPolicy(), VOCAB)
        assert result.tags == ["Journal Article"]
        assert result.provenance["Journal Article"].rules == ("fallback",)

    def test_excludes_drops_the_lower_score(self):
        policy = CompilerPolicy(
            rules=(Rule("excludes", "Letter", "Editorial", keep="higher_score"),)
        )
        scores = sv({"Letter": 0.8, "Editorial": 0.6})
        result = compile_tags(scores, policy, VOCAB)
        assert "Editorial" not in result.tags
        assert "Letter" in result.tags

    def test_excludes_keep_sides(self):
        scores = sv({"Letter": 0.6, "Editorial": 0.9})
        keep_a = CompilerPolicy(rules=(Rule("excludes", "Letter", "Editorial", keep="a"),))
        assert compile_tags(scores, keep_a, VOCAB).tags == ["Letter"]
        keep_b = CompilerPolicy(rules=(Rule("excludes", "Letter", "Editorial", keep="b"),))
        assert compile_tags(scores, keep_b, VOCAB).tags == ["Editorial"]

    def test_excludes_score_tie_keeps_a(self):
        policy = CompilerPolicy(
            rules=(Rule("excludes", "Editorial", "Letter", keep="higher_score"),)
        )
        result = compile_tags(sv({"Letter": 0.7, "Editorial": 0.7}), policy, VOCAB)
        assert result.tags == ["Editorial"]

    def test_implies_adds_consequent_with_provenance(self):
        policy = CompilerPolicy(rules=(Rule("implies", "Review", "Journal Article"),))
        result = compile_tags(sv({"Review": 0.9, "Journal Article": 0.2}), policy, VOCAB)
        assert set(result.tags) == {"Review", "Journal Article"}
        assert "implied by Review" in result.provenance["Journal Article"].rules

    def test_implied_label_without_score_loses_excludes(self):
        policy = CompilerPolicy(
            rules=(
                Rule("implies", "Review", "Editorial"),
                Rule("excludes", "Editorial", "Letter", keep="higher_score"),
            )
        )
        scores = sv({"Review": 0.9, "Letter": 0.6})  # Editorial never scored
        result = compile_tags(scores, policy, VOCAB)
        assert "Editorial" not in result.tags
        assert "Letter" in result.tags

    def test_rules_apply_in_listed_order(self):
        # First rule removes Letter, so the second (Letter excludes Editorial)
        # no longer fires.
        policy = CompilerPolicy(
            rules=(
                Rule("excludes", "Review", "Letter", keep="a"),
                Rule("excludes", "Letter", "Editorial", keep="a"),
            )
        )
        scores = sv({"Review": 0.8, "Letter": 0.7, "Editorial": 0.6})
        result = compile_tags(scores, policy, VOCAB)
        assert set(result.tags) == {"Review", "Editorial"}

    def test_reliability_filter_uses_descriptor_recall(self):
        descriptors = [
            ScorerDescriptor(
                name="rev",
                kind="binary",
                vocabulary=("Review",),
                validation_metrics={"Review": {"precision": 1.0, "recall": 0.4, "f1": 0.6}},
            ),
            ScorerDescriptor(
                name="let",
                kind="binary",
                vocabulary=("Letter",),
                validation_metrics={"Letter": {"precision": 1.0, "recall": 0.9, "f1": 0.9}},
            ),
        ]
        policy = CompilerPolicy(reliability_min_recall=0.5)
        scores = sv({"Review": 0.9, "Letter": 0.9})
        result = compile_tags(scores, policy, VOCAB, descriptors)
        assert result.tags == ["Letter"]

    def test_unknown_recall_is_kept_by_the_filter(self):
        assert reliable_labels(["Review", "Letter"], 0.5, []) == {"Review", "Letter"}

    def test_score_outside_vocab_is_a_data_error(self):
        with pytest.raises(DataError):
            compile_tags(sv({"Mystery": 0.9}), CompilerPolicy(), VOCAB)

    def test_per_label_thresholds_with_default(self):
        policy = CompilerPolicy(threshold_mode="per_label", thresholds={"Review": 0.9})
        scores = sv({"Review": 0.85, "Letter": 0.6})
        result = compile_tags(scores, policy, VOCAB)
        # Review misses its 0.9 bar; Letter uses the 0.5 default.
        assert result.tags == ["Letter"]

    def test_fallback_off_allows_empty(self):
        policy = CompilerPolicy(base_label_fallback=False)
        result = compile_tags(sv({"Review": 0.1}), policy, VOCAB)
        assert result.tags == []

    def test_provenance_records_score_and_threshold(self):
        result = compile_tags(sv({"Review": 0.95}), CompilerPolicy(thresholds=0.6), VOCAB)
        entry = result.provenance["Review"]
        assert entry.score == 0.95
        assert entry.threshold == 0.6

    def test_json_row_shape(self):
        result = compile_tags(sv({"Review": 0.95}), CompilerPolicy(), VOCAB)
        row = result.to_json()
        assert set(row) == {"id", "tags", "provenance"}
        assert row["id"] == "c1"
        assert row["tags"] == ["Review"]

    def test_raising_fixed_threshold_never_adds_tags(self):
        rng = random.Random(37)
        labels = list(VOCAB.labels)
        for _ in range(200):
            scores = sv({l: rng.random() for l in labels})
            t1, t2 = sorted((rng.random(), rng.random()))
            low = compile_tags(
                scores, CompilerPolicy(thresholds=t1, base_label_fallback=False), VOCAB
            )
            high = compile_tags(
                scores, CompilerPolicy(thresholds=t2, base_label_fallback=False), VOCAB
            )
            assert set(high.tags) <= set(low.tags)

    def test_adherence_on_random_vectors(self):
        rng = random.Random(43)
        labels = list(VOCAB.labels)
        # implies listed first: a later implies could re-add a label an
        # earlier excludes removed, which would void the invariant below
        rules = (
            Rule("implies", "Editorial", "Journal Article"),
            Rule("excludes", "Letter", "Editorial", keep="higher_score"),
            Rule("excludes", "Journal Article", "Review", keep="b"),
        )
        for _ in range(500):
            policy = CompilerPolicy(
                thresholds=rng.random(),
                max_tags=rng.randrange(1, 7),
                rules=rules,
                base_label_fallback=True,
            )
            scores = sv({l: rng.random() for l in labels})
            result = compile_tags(scores, policy, VOCAB)
            assert result.tags, "fallback must prevent empty output"
            assert len(result.tags) <= policy.max_tags
            assert len(set(result.tags)) == len(result.tags)
            present = set(result.tags)
            assert not ({"Letter", "Editorial"} <= present)
            assert not ({"Journal Article", "Review"} <= present)


class TestPolicy:
    def test_defaults_are_fixed_half_threshold(self):
        policy = CompilerPolicy()
        assert policy.threshold_mode == "fixed"
        assert policy.thresholds == 0.5
        assert policy.max_tags == 6

    def test_bad_threshold_mode_rejected(self):
        with pytest.raises(ConfigError):
            CompilerPolicy(threshold_mode="adaptive")

    def test_threshold_range_enforced(self):
        with pytest.raises(ConfigError):
            CompilerPolicy(thresholds=1.5)
        with pytest.raises(ConfigError):
            CompilerPolicy(threshold_mode="per_label", thresholds={"A": -0.1})

    def test_max_tags_must_be_positive(self):
        with pytest.raises(ConfigError):
            CompilerPolicy(max_tags=0)

    def test_rule_validation(self):
        with pytest.raises(ConfigError):
            Rule("excludes", "A", "A")
        with pytest.raises(ConfigError):
            Rule("becomes", "A", "B")
        with pytest.raises(ConfigError):
            Rule("implies", "A", "B", keep="a")
        with pytest.raises(ConfigError):
            Rule("excludes", "A", "B", keep="both")

    def test_rule_label_must_be_in_vocabulary(self):
        policy = CompilerPolicy(rules=(Rule("excludes", "Review", "Mystery"),))
        with pytest.raises(ConfigError, match="Mystery"):
            policy.validate_labels(VOCAB)

    def test_json_round_trip(self, tmp_path):
        policy = CompilerPolicy(
            threshold_mode="per_label",
            thresholds={"Review": 0.7},
            reliability_min_recall=0.6,
            max_tags=3,
            rules=(Rule("excludes", "Letter", "Editorial", keep="a"),),
            base_label_fallback=False,
        )
        path = tmp_path / "policy.json"
        policy.save(path)
        loaded = CompilerPolicy.load(path)
        assert loaded.to_json() == policy.to_json()

    def test_unknown_policy_field_rejected(self, tmp_path):
        path = tmp_path / "policy.json"
        path.write_text(json.dumps({"threshold_mode": "fixed", "thresholds": 0.5, "surprise": 1}))
        with pytest.raises(ConfigError, match="surprise"):
            CompilerPolicy.load(path)


class TestTuneThresholds:
    def test_separated_scores_choose_the_lowest_perfect_threshold(self):
        vectors = [
            sv({"T": 0.9}, "p1"),
            sv({"T": 0.9}, "p2"),
            sv({"T": 0.1}, "n1"),
            sv({"T": 0.1}, "n2"),
        ]
        gold = {"p1": {"T"}, "p2": {"T"}, "n1": set(), "n2": set()}
        assert tune_thresholds(vectors, gold) == {"T": 0.9}

    TOY_SCORES = [0.9, 0.7, 0.6, 0.2]
    TOY_GOLD = [True, False, True, False]

    def _toy_vectors(self):
        vectors = [sv({"T": s}, f"c{i}") for i, s in enumerate(self.TOY_SCORES)]
        gold = {
            f"c{i}": ({"T"} if g else set()) for i, g in enumerate(self.TOY_GOLD)
        }
        return vectors, gold

    def _f1_at(self, t):
        tp = sum(1 for s, g in zip(self.TOY_SCORES, self.TOY_GOLD) if g and s >= t)
        fp = sum(1 for s, g in zip(self.TOY_SCORES, self.TOY_GOLD) if not g and s >= t)
        fn = sum(1 for s, g in zip(self.TOY_SCORES, self.TOY_GOLD) if g and s < t)
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        return 2 * precision * recall / (precision + recall) if precision + recall else 0.0

    def test_max_f1_toy_matches_brute_force(self):
        vectors, gold = self._toy_vectors()
        candidates = sorted(set(self.TOY_SCORES) | {0.0, 1.0})
        best_f1 = max(self._f1_at(t) for t in candidates)
        best_t = min(t for t in candidates if self._f1_at(t) == best_f1)
        assert best_t == 0.6 and best_f1 == pytest.approx(0.8)  # frozen by hand
        assert tune_thresholds(vectors, gold) == {"T": best_t}

    def test_recall_floor_toy_matches_brute_force(self):
        vectors, gold = self._toy_vectors()

        def recall_at(t):
            tp = sum(1 for s, g in zip(self.TOY_SCORES, self.TOY_GOLD) if g and s >= t)
            fn = sum(1 for s, g in zip(self.TOY_SCORES, self.TOY_GOLD) if g and s < t)
            return tp / (tp + fn)

        candidates = sorted(set(self.TOY_SCORES) | {0.0, 1.0})
        want = min(t for t in candidates if recall_at(t) >= 0.9)
        got = tune_thresholds(vectors, gold, "recall_at_least:0.9")
        assert got == {"T": want}

    def test_label_without_positives_is_omitted_with_warning(self, caplog):
        vectors = [sv({"T": 0.4, "U": 0.2}, "c0")]
        gold = {"c0": {"T"}}
        with caplog.at_level(logging.WARNING):
            got = tune_thresholds(vectors, gold)
        assert "U" not in got
        assert any("U" in record.message for record in caplog.records)

    def test_missing_gold_id_is_an_alignment_error(self):
        with pytest.raises(AlignmentError):
            tune_thresholds([sv({"T": 0.5}, "ghost")], {})

    def test_bad_objective_rejected(self):
        with pytest.raises(ConfigError):
            tune_thresholds([], {}, "maximize_vibes")


class TestTagCompilerEstimator:
    def test_transform_matches_function(self):
        policy = CompilerPolicy(max_tags=2)
        vectors = [sv({"Review": 0.9}, "a"), sv({"Letter": 0.2}, "b")]
        compiler = TagCompiler(policy=policy, vocab=VOCAB)
        got = compiler.fit(vectors).transform(vectors)
        want = [compile_tags(v, policy, VOCAB) for v in vectors]
        assert [t.to_json() for t in got] == [t.to_json() for t in want]

    def test_get_params_exposes_policy(self):
        compiler = TagCompiler(policy=CompilerPolicy(), vocab=VOCAB)
        assert "policy" in compiler.get_params()
