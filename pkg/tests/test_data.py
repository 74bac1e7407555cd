import io
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from baitscore.data import (
    CLICKBAIT,
    JUDGMENT_SCALE,
    JUDGMENT_SCALE_THIRDS,
    NO_CLICKBAIT,
    Dataset,
    IngestError,
    Post,
    RatioStat,
    TruthAnnotation,
    class_ratio,
    join_truth,
    mean_of,
    parse_instances,
    parse_truth,
    serialize_instances,
    serialize_truth,
    train_val_split,
)
from helpers import make_dataset, truth_for


def parse_lines(*lines):
    return parse_instances(io.StringIO("\n".join(lines)))


class TestParseInstances:
    def test_minimal_line_maps_fields(self):
        ds = parse_lines('{"id":"1","postText":["hi"]}')
        assert len(ds) == 1
        post = ds.posts[0]
        assert post.id == "1"
        assert post.post_text == ("hi",)
        assert post.target_title == ""
        assert post.target_paragraphs == ()

    def test_empty_stream(self):
        assert len(parse_lines()) == 0

    def test_malformed_line_reports_line_number(self):
        with pytest.raises(IngestError, match="line 2"):
            parse_lines('{"id":"1"}', "{nope")

    def test_duplicate_id_reports_id(self):
        with pytest.raises(IngestError, match="'7'"):
            parse_lines('{"id":"7"}', '{"id":"7"}')

    def test_unknown_fields_ignored(self):
        ds = parse_lines('{"id":"1","postText":["x"],"somethingElse":42}')
        assert ds.posts[0].post_text == ("x",)

    def test_order_preserved(self):
        ds = parse_lines('{"id":"b"}', '{"id":"a"}', '{"id":"c"}')
        assert [p.id for p in ds.posts] == ["b", "a", "c"]

    def test_round_trip(self):
        ds = parse_lines(
            json.dumps(
                {
                    "id": "9",
                    "postText": ["one", "two"],
                    "postMedia": ["m.png"],
                    "postTimestamp": "t",
                    "targetTitle": "T",
                    "targetDescription": "D",
                    "targetKeywords": "k1,k2",
                    "targetParagraphs": ["p1"],
                    "targetCaptions": ["c"],
                }
            )
        )
        again = parse_instances(io.StringIO("\n".join(serialize_instances(ds))))
        assert again.posts == ds.posts


class TestParseTruth:
    def run(self, judgments, mean=None, cls=None, scale=JUDGMENT_SCALE):
        obj = {"id": "t", "truthJudgments": judgments,
               "truthMean": mean if mean is not None else sum(judgments) / len(judgments)}
        if cls:
            obj["truthClass"] = cls
        return parse_truth(io.StringIO(json.dumps(obj)), scale=scale)["t"]

    def test_all_zero(self):
        truth = self.run([0.0] * 5)
        assert truth.truth_mean == 0.0
        assert truth.truth_class == NO_CLICKBAIT

    def test_hand_mean(self):
        truth = self.run([0.0, 0.3, 0.66, 1.0, 1.0])
        assert truth.truth_mean == pytest.approx(0.592, abs=1e-12)
        assert truth.truth_class == CLICKBAIT

    def test_all_one(self):
        truth = self.run([1.0] * 5)
        assert truth.truth_mean == 1.0
        assert truth.truth_class == CLICKBAIT

    def test_mean_mismatch_rejected(self):
        with pytest.raises(IngestError, match="differs"):
            self.run([0.0] * 5, mean=0.3)

    def test_off_scale_judgment_rejected(self):
        with pytest.raises(IngestError, match="not on the scale"):
            self.run([0.0, 0.5, 0.0, 0.0, 0.0], mean=0.1)

    def test_thirds_scale_option(self):
        third = 1.0 / 3.0
        truth = self.run([third] * 6, scale=JUDGMENT_SCALE_THIRDS)
        assert truth.truth_mean == pytest.approx(third)
        with pytest.raises(IngestError):
            self.run([third] * 6)  # strict default scale

    def test_fewer_than_five_judgments_rejected(self):
        with pytest.raises(IngestError, match="at least 5"):
            self.run([0.0] * 4)

    def test_synthetic_records_round_trip(self):
        synth = TruthAnnotation(
            id="s", judgments=(), truth_mean=0.42, truth_class=NO_CLICKBAIT,
            synthetic=True,
        )
        line = "\n".join(serialize_truth([synth]))
        again = parse_truth(io.StringIO(line))["s"]
        assert again == synth


class TestClassRatio:
    def test_synthetic_counts(self):
        ds = make_dataset(
            [("a", "x", (0.66, 0.66, 0.66, 0.66, 0.66))]
            + [(f"b{i}", "y", (0.0, 0.0, 0.3, 0.0, 0.3)) for i in range(3)]
        )
        ratio = class_ratio(ds)
        assert ratio.n_posts == 4
        assert ratio.n_clickbait == 1
        assert ratio.n_not == 3
        assert ratio.display() == "1:3.00"

    def test_tie_counts_as_clickbait(self):
        ds = make_dataset([("a", "x", (0.3, 0.3, 0.66, 0.66, 0.58))])
        # mean exactly 0.5
        assert ds.truths["a"].truth_mean == pytest.approx(0.5)
        assert class_ratio(ds).n_clickbait == 1

    def test_zero_clickbait_flagged(self):
        ratio = RatioStat(n_posts=2, n_clickbait=0, n_not=2)
        assert not ratio.defined
        assert "undefined" in ratio.display()

    def test_unlabelled_rejected(self):
        ds = make_dataset([("a", "x", None)])
        with pytest.raises(IngestError):
            class_ratio(ds)

    def test_display_rounding_two_places(self):
        assert RatioStat(10, 3, 7).display() == "1:2.33"


class TestSplit:
    def test_paper_scale_sizes(self):
        # round(0.2 * 19538) = 3908 validation, remainder train
        n = 19_538
        ds = make_dataset([(f"p{i}", "w", None) for i in range(n)])
        train, val = train_val_split(ds, 0.2, seed=0)
        assert len(val) == 3_908
        assert len(train) == 15_630

    def test_deterministic(self):
        ds = make_dataset([(f"p{i}", "w", None) for i in range(10)])
        a = train_val_split(ds, 0.2, seed=9)
        b = train_val_split(ds, 0.2, seed=9)
        assert [p.id for p in a[0].posts] == [p.id for p in b[0].posts]
        assert [p.id for p in a[1].posts] == [p.id for p in b[1].posts]

    def test_minimal_half_split(self):
        ds = make_dataset([("a", "x", None), ("b", "y", None)])
        train, val = train_val_split(ds, 0.5, seed=1)
        assert len(train) == 1 and len(val) == 1

    def test_too_small_rejected(self):
        ds = make_dataset([("a", "x", None)])
        with pytest.raises(IngestError):
            train_val_split(ds, 0.5, seed=1)

    @given(
        n=st.integers(min_value=2, max_value=60),
        fraction=st.floats(min_value=0.05, max_value=0.95),
        seed=st.integers(min_value=0, max_value=2**31),
    )
    @settings(max_examples=60, deadline=None)
    def test_partition_property(self, n, fraction, seed):
        ds = make_dataset([(f"p{i}", "w", None) for i in range(n)])
        train, val = train_val_split(ds, fraction, seed)
        train_ids = {p.id for p in train.posts}
        val_ids = {p.id for p in val.posts}
        assert not (train_ids & val_ids)
        assert train_ids | val_ids == {p.id for p in ds.posts}
        assert len(val) == int(fraction * n + 0.5)


class TestDatasetInvariants:
    def test_duplicate_post_ids_rejected(self):
        with pytest.raises(IngestError):
            Dataset(posts=[Post(id="a"), Post(id="a")])

    def test_truth_without_post_rejected(self):
        with pytest.raises(IngestError):
            Dataset(posts=[Post(id="a")], truths={"b": truth_for("b", (0.0,) * 5)})

    def test_join_truth_requires_full_cover(self):
        ds = make_dataset([("a", "x", None), ("b", "y", None)])
        with pytest.raises(IngestError, match="lack truth"):
            join_truth(ds, {"a": truth_for("a", (0.0,) * 5)})

    def test_mean_of_empty_rejected(self):
        with pytest.raises(IngestError):
            mean_of([])
