from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from idforge.ingest import parse_author_string
from idforge.strsim import (
    MISSING,
    jaro,
    jaro_winkler,
    levenshtein_similarity,
    pair_string_features,
)
from oracles import jaro_naive, jaro_winkler_naive, levenshtein_naive

short_text = st.text(alphabet="abcd", max_size=12)
any_text = st.text(max_size=24)


def test_jaro_anchors():
    assert jaro("abc", "abc") == 1.0
    assert jaro("abc", "xyz") == 0.0
    # m=6, t=1: (1 + 1 + 5/6)/3
    assert jaro("MARTHA", "MARHTA") == pytest.approx(0.944444, abs=1e-6)


def test_jaro_empty_strings_share_no_matches():
    assert jaro("", "") == 0.0
    assert jaro("", "abc") == 0.0


def test_jaro_winkler_anchors():
    assert jaro_winkler("same", "same") == 1.0
    # sim_j = 17/18, common prefix "mar" of length 3
    assert jaro_winkler("MARTHA", "MARHTA", p=0.1, l_max=4) == pytest.approx(
        0.961111, abs=1e-6
    )
    assert jaro_winkler("abc", "xyz") == 0.0


def test_jaro_winkler_rejects_bad_scaling():
    with pytest.raises(ValueError):
        jaro_winkler("a", "b", p=0.3)
    with pytest.raises(ValueError):
        jaro_winkler("a", "b", p=-0.01)


def test_levenshtein_anchors():
    assert levenshtein_similarity("kitten", "sitting") == pytest.approx(1 - 3 / 7)
    assert levenshtein_similarity("abc", "abc") == 1.0
    assert levenshtein_similarity("", "abc") == 0.0
    assert levenshtein_similarity("", "") == 1.0


def test_kernels_lowercase_inputs():
    assert jaro("Alex", "alex") == 1.0
    assert jaro_winkler("Alex", "ALEX") == 1.0
    assert levenshtein_similarity("Alex", "aLeX") == 1.0


@given(short_text, short_text)
def test_kernels_match_naive_oracles(s1, s2):
    assert jaro(s1, s2) == pytest.approx(jaro_naive(s1, s2), abs=1e-12)
    assert jaro_winkler(s1, s2) == pytest.approx(jaro_winkler_naive(s1, s2), abs=1e-12)
    assert levenshtein_similarity(s1, s2) == pytest.approx(
        levenshtein_naive(s1, s2), abs=1e-12
    )


@settings(max_examples=300)
@given(any_text, any_text)
def test_kernels_match_naive_oracles_unicode(s1, s2):
    assert jaro(s1, s2) == pytest.approx(jaro_naive(s1, s2), abs=1e-12)
    assert jaro_winkler(s1, s2) == pytest.approx(jaro_winkler_naive(s1, s2), abs=1e-12)
    assert levenshtein_similarity(s1, s2) == pytest.approx(
        levenshtein_naive(s1, s2), abs=1e-12
    )


@given(short_text, short_text)
def test_kernels_symmetric_and_bounded(s1, s2):
    for fn in (jaro, jaro_winkler, levenshtein_similarity):
        v = fn(s1, s2)
        assert fn(s2, s1) == v
        assert 0.0 <= v <= 1.0


@given(short_text, short_text)
def test_winkler_dominates_jaro(s1, s2):
    j = jaro(s1, s2)
    jw = jaro_winkler(s1, s2)
    assert jw >= j
    if not (s1 and s2 and s1.lower()[0] == s2.lower()[0]):
        assert jw == j  # no common prefix, no boost


@given(st.text(alphabet="abcd", min_size=1, max_size=12))
def test_identity_scores_one_for_nonempty(s):
    assert jaro(s, s) == 1.0
    assert jaro_winkler(s, s) == 1.0
    assert levenshtein_similarity(s, s) == 1.0


def test_pair_features_identical_identity():
    # undelimited name: first == last == name, so even the cross feature is 1
    a = parse_author_string("bharaththiruveedula <bharath_ves@hotmail.com>")
    fs = pair_string_features(a, a)
    assert fs.as_tuple() == (1.0,) * 6


def test_pair_features_identical_two_part_name():
    # self-pair of a two-part name: the five same-attribute features are 1,
    # the cross feature is just first-vs-last similarity
    a = parse_author_string("Hong Hui Xiao <xiaohhui@cn.ibm.com>")
    fs = pair_string_features(a, a)
    assert fs.as_tuple()[:5] == (1.0,) * 5
    assert fs.jw_inverse_first == jaro_winkler("Hong", "Xiao")


def test_pair_features_typo_synonym_scores_high():
    a1 = parse_author_string("Paul Luse <paul.e.luse@intel.com>")
    a2 = parse_author_string("paul luse <paul.e.luse@itnel.com>")
    fs = pair_string_features(a1, a2)
    assert fs.jw_email > 0.9
    assert fs.jw_name > 0.9


def test_pair_features_reversed_name_order():
    a1 = parse_author_string("Wei Zhang <wz@example.com>")
    a2 = parse_author_string("Zhang Wei <zw@example.com>")
    fs = pair_string_features(a1, a2)
    assert fs.jw_inverse_first == 1.0


def test_pair_features_missing_sentinel():
    a1 = parse_author_string("chrisw <unknown>")  # no user name
    a2 = parse_author_string("Chris Wilson <chrisw@example.com>")
    fs = pair_string_features(a1, a2)
    assert fs.jw_user == MISSING
    assert 0.0 <= fs.jw_name <= 1.0


def test_pair_features_empty_both_sides():
    a1 = parse_author_string("")
    a2 = parse_author_string("")
    fs = pair_string_features(a1, a2)
    assert fs.as_tuple() == (MISSING,) * 6


@given(short_text, short_text)
def test_one_only_for_equal_inputs_at_defaults(s1, s2):
    # the iff direction: a perfect score implies (lower-cased) equality,
    # for the default prefix scale where the boost cannot saturate
    if jaro(s1, s2) == 1.0:
        assert s1.lower() == s2.lower()
    if jaro_winkler(s1, s2) == 1.0:
        assert s1.lower() == s2.lower()
    if levenshtein_similarity(s1, s2) == 1.0:
        assert s1.lower() == s2.lower()


def test_saturated_prefix_scale_is_the_documented_exception():
    # p * l_max = 1 lets a shared 4-char prefix reach 1.0 without equality
    assert jaro_winkler("abcdxx", "abcdyy", p=0.25, l_max=4) == 1.0
    assert jaro_winkler("abcdxx", "abcdyy") < 1.0  # defaults stay strict
