import pytest
from hypothesis import given, strategies as st

from gamiscreen.errors import InputError
from gamiscreen.textfeatures import (
    AppRecord,
    Lexicon,
    VariableGrouping,
    build_features,
    extract_features,
    match_keywords,
    tokenize,
)

VARIABLE_ORDER = (
    "Activity Tracking", "Entertainment", "Game Labels", "Engagement",
    "Quizzes", "Player Aspects", "Diary", "Change", "Story", "Progress",
    "Purpose", "Quest", "Routine", "Statistics",
)


class TestTokenize:
    def test_basic(self):
        assert tokenize("Track your progress!") == ["track", "your", "progress"]

    def test_empty(self):
        assert tokenize("") == []

    def test_punctuation_separators(self):
        assert tokenize("Fun&games—QUIZ time") == ["fun", "games", "quiz", "time"]

    def test_underscore_separates(self):
        assert tokenize("game_on") == ["game", "on"]

    def test_digits_kept(self):
        assert tokenize("level 2 quest") == ["level", "2", "quest"]

    def test_unicode_letters_kept(self):
        assert tokenize("Café quiz") == ["café", "quiz"]


class TestDefaultLexicon:
    def test_size(self, lexicon):
        assert len(lexicon.keywords) == 79

    def test_split_cell_contributes_both(self, lexicon):
        assert "gamify" in lexicon
        assert "gaming" in lexicon

    def test_all_lowercase_single_token(self, lexicon):
        for k in lexicon.keywords:
            assert k == k.casefold()
            assert tokenize(k) == [k]

    def test_inflections_listed_separately(self, lexicon):
        assert {"game", "games", "track", "tracking", "quest", "quests"} <= lexicon.keywords

    def test_invalid_keyword_rejected(self):
        with pytest.raises(InputError):
            Lexicon(keywords=frozenset({"two words"}))


class TestDefaultGrouping:
    def test_variable_order(self, grouping):
        assert grouping.names == VARIABLE_ORDER

    def test_members(self, grouping):
        assert grouping.members("Activity Tracking") == frozenset(
            {"log", "logging", "measure", "monitor", "track", "tracking"})
        assert grouping.members("Quizzes") == frozenset({"quiz", "trivia"})
        assert grouping.members("Diary") == frozenset({"diary"})

    def test_disjoint_and_in_lexicon(self, grouping, lexicon):
        grouping.check_against(lexicon)
        total = sum(len(m) for _, m in grouping.variables)
        assert total == len(grouping.all_keywords)  # pairwise disjoint

    def test_overlapping_grouping_rejected(self):
        with pytest.raises(InputError):
            VariableGrouping(variables=(
                ("A", frozenset({"game"})),
                ("B", frozenset({"game", "play"})),
            ))


class TestMatching:
    def test_title_matched(self, lexicon):
        r = AppRecord(id="1", store="ios", title="Quiz about BC", description="")
        assert match_keywords(r, lexicon) == {"quiz"}

    def test_near_miss_token(self, lexicon):
        r = AppRecord(id="1", store="ios", description="gamer community")
        assert match_keywords(r, lexicon) == set()

    def test_whole_token_scan(self, lexicon):
        r = AppRecord(id="1", store="android", description="Log and track your routine")
        assert match_keywords(r, lexicon) == {"log", "track", "routine"}

    def test_no_substring_matching(self, lexicon):
        r = AppRecord(id="1", store="android", description="untracked gamesmanship")
        assert match_keywords(r, lexicon) == set()


class TestBuildFeatures:
    def test_empty(self, grouping):
        fv = build_features(set(), grouping)
        assert fv.bits == (0,) * 14

    def test_activity_tracking_only(self, grouping):
        fv = build_features({"log", "track"}, grouping)
        expected = tuple(1 if n == "Activity Tracking" else 0 for n in grouping.names)
        assert fv.bits == expected

    def test_three_variables(self, grouping):
        fv = build_features({"quiz", "story", "diary"}, grouping)
        on = {"Quizzes", "Story", "Diary"}
        assert fv.bits == tuple(1 if n in on else 0 for n in grouping.names)

    def test_lexicon_word_outside_grouping_sets_no_bit(self, lexicon, grouping):
        # "score" is a lexicon keyword but belongs to no model variable
        r = AppRecord(id="1", store="android", description="high score")
        fv = extract_features(r, lexicon, grouping)
        assert fv.bits == (0,) * 14
        assert fv.matched_keywords == frozenset({"score"})


class TestRecordValidation:
    def test_empty_id_rejected(self):
        with pytest.raises(InputError):
            AppRecord(id="", store="ios")

    def test_bad_store_rejected(self):
        with pytest.raises(InputError):
            AppRecord(id="1", store="windows")

    def test_bad_label_rejected(self):
        with pytest.raises(InputError):
            AppRecord(id="1", store="ios", gamification_label=2)


text_strategy = st.text(
    alphabet=st.characters(exclude_categories=("Cs",)), max_size=200)


class TestProperties:
    @given(text_strategy)
    def test_case_invariance(self, text):
        import gamiscreen as g
        lexicon, grouping = g.default_lexicon(), g.default_grouping()
        r1 = AppRecord(id="1", store="ios", description=text)
        r2 = AppRecord(id="2", store="ios", description=text.upper())
        fv1 = extract_features(r1, lexicon, grouping)
        fv2 = extract_features(r2, lexicon, grouping)
        assert fv1.bits == fv2.bits

    @given(text_strategy)
    def test_idempotence(self, text):
        import gamiscreen as g
        lexicon, grouping = g.default_lexicon(), g.default_grouping()
        r = AppRecord(id="1", store="ios", description=text)
        assert extract_features(r, lexicon, grouping) == extract_features(r, lexicon, grouping)

    @given(text_strategy)
    def test_appending_non_keyword_text_is_noop(self, text):
        import gamiscreen as g
        lexicon, grouping = g.default_lexicon(), g.default_grouping()
        r1 = AppRecord(id="1", store="ios", description=text)
        r2 = AppRecord(id="2", store="ios", description=text + " zyxxyq blorp9")
        assert (extract_features(r1, lexicon, grouping).bits
                == extract_features(r2, lexicon, grouping).bits)

    @given(st.sets(st.sampled_from(sorted({
        "log", "play", "game", "engage", "quiz", "player", "diary", "change",
        "story", "progress", "purpose", "quest", "routine", "statistics",
        "score", "badges", "fun", "track"}))))
    def test_bit_semantics(self, chosen):
        import gamiscreen as g
        grouping = g.default_grouping()
        fv = build_features(chosen, grouping)
        for i, (name, members) in enumerate(grouping.variables):
            assert fv.bits[i] == int(bool(chosen & members))
