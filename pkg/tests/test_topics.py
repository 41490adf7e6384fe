import itertools

import pytest

from iotfactory.transport import TopicError, topic_matches, validate_filter, validate_topic


def oracle_match(filt_levels, topic_levels):
    """Brute-force recursive matcher, kept deliberately naive."""
    if not filt_levels:
        return not topic_levels
    head, rest = filt_levels[0], filt_levels[1:]
    if head == "#":
        return True
    if not topic_levels:
        return False
    if head == "+" or head == topic_levels[0]:
        return oracle_match(rest, topic_levels[1:])
    return False


def test_single_level_wildcard():
    assert topic_matches("plant/+/energy", "plant/m1/energy")
    assert not topic_matches("plant/+/energy", "plant/m1/temperature")
    assert not topic_matches("plant/+/energy", "plant/m1/x/energy")


def test_multi_level_wildcard():
    assert topic_matches("plant/#", "plant")
    assert topic_matches("plant/#", "plant/m1/energy")
    assert not topic_matches("plant/#", "plantx")


def test_exact_match():
    assert topic_matches("plant/m1/cmd", "plant/m1/cmd")
    assert not topic_matches("plant/m1/cmd", "plant/m1")


def test_invalid_filters():
    for bad in ("plant/#/energy", "#/plant", "plant/a#", "plant/a+b", "plant//x", ""):
        with pytest.raises(TopicError):
            validate_filter(bad)


def test_invalid_topics():
    for bad in ("", "plant//x", "plant/+/x", "plant/#"):
        with pytest.raises(TopicError):
            validate_topic(bad)


def test_exhaustive_small_universe_matches_oracle():
    """All filters and topics of <= 3 levels over a 2-symbol alphabet."""
    topic_symbols = ["a", "b"]
    filter_symbols = ["a", "b", "+", "#"]
    topics = []
    for n in (1, 2, 3):
        topics.extend(itertools.product(topic_symbols, repeat=n))
    filters = []
    for n in (1, 2, 3):
        for combo in itertools.product(filter_symbols, repeat=n):
            if "#" in combo[:-1]:
                continue  # '#' must be final
            filters.append(combo)

    checked = 0
    for f in filters:
        for t in topics:
            expect = oracle_match(list(f), list(t))
            got = topic_matches("/".join(f), "/".join(t))
            assert got == expect, f"filter={f} topic={t}"
            checked += 1
    assert checked == len(filters) * len(topics)
