import pytest

from core.exceptions import EnumerationCapError, ValidationError
from words.models import EMPTY_WORD, Antichain, Word
from words.services import WordService, check_level_cap


@pytest.fixture
def service(geometry):
    return WordService(geometry=geometry)


class TestWord:
    def test_serialization(self):
        assert str(Word((2, 1, 1))) == '2.1.1'
        assert str(EMPTY_WORD) == '-'
        assert Word.parse('2.1.1') == Word((2, 1, 1))
        assert Word.parse('-') == EMPTY_WORD

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValidationError):
            Word.parse('1.x')

    def test_truncation_is_prefix(self):
        word = Word((2, 1, 2, 2))
        for k in range(len(word) + 1):
            assert word.truncate(k).is_prefix_of(word)

    def test_concat(self):
        sigma, tau, rho = Word((1,)), Word((2, 1)), Word((2,))
        assert len(sigma + tau) == 3
        assert sigma.is_prefix_of(sigma + tau)
        assert (sigma + tau) + rho == sigma + (tau + rho)

    def test_parent_and_suffix(self):
        word = Word((1, 2, 2))
        assert word.parent == Word((1, 2))
        assert word.suffix(1) == Word((2, 2))
        with pytest.raises(ValidationError):
            EMPTY_WORD.parent

    def test_validate_symbol_range(self):
        with pytest.raises(ValidationError):
            Word((1, 3)).validate(2)

    def test_index_round_trip_on_one_level(self):
        for position in range(27):
            assert Word.from_index(position, 3, 3).index(3) == position


class TestEnumeration:
    def test_level_zero(self, service):
        assert service.enumerate_words(2, 0) == [EMPTY_WORD]

    def test_binary_level_two(self, service):
        words = service.enumerate_words(2, 2)
        assert words == [Word((1, 1)), Word((1, 2)), Word((2, 1)), Word((2, 2))]

    def test_count(self, service):
        assert len(service.enumerate_words(3, 4)) == 81

    def test_lexicographic_matches_index(self, service):
        words = service.enumerate_words(3, 3)
        assert [w.index(3) for w in words] == list(range(27))

    def test_rejects_single_branch(self, service):
        with pytest.raises(ValidationError):
            service.enumerate_words(1, 3)

    def test_cap(self):
        service = WordService(cap=1000)
        with pytest.raises(EnumerationCapError):
            service.enumerate_words(2, 10)
        assert check_level_cap(2, 9, 1000) == 512


class TestAntichains:
    def test_cantor_level_one(self, service, cantor):
        antichain = service.antichain_by_diameter(cantor, 0.4)
        assert list(antichain) == [Word((1,)), Word((2,))]

    def test_cantor_level_two(self, service, cantor):
        antichain = service.antichain_by_diameter(cantor, 1 / 9)
        assert len(antichain) == 4
        assert all(len(w) == 2 for w in antichain)

    def test_golden_mixed_lengths(self, service, golden, geometry):
        antichain = service.antichain_by_diameter(golden, 0.3)
        assert list(antichain) == [Word((1, 1)), Word((1, 2)), Word((2,))]
        diameters = [geometry.cylinder_diameter(golden, w) for w in antichain]
        assert diameters == pytest.approx([1 / 4, 1 / 8, 1 / 4])

    @pytest.mark.parametrize('epsilon', [0.2, 0.05, 0.013])
    def test_output_is_valid(self, service, golden, logistic, epsilon):
        for system in (golden, logistic):
            antichain = service.antichain_by_diameter(system, epsilon)
            assert service.validate_antichain(antichain, 2).valid

    def test_rejects_epsilon_out_of_range(self, service, cantor):
        with pytest.raises(ValidationError):
            service.antichain_by_diameter(cantor, 1.0)

    def test_word_length_cap(self, geometry, cantor):
        service = WordService(geometry=geometry, max_word_length=3)
        with pytest.raises(EnumerationCapError):
            service.antichain_by_diameter(cantor, 1e-3)


class TestValidateAntichain:
    def test_level_set_is_valid(self, service):
        report = service.validate_antichain(Antichain.of([Word((1,)), Word((2,))]), 2)
        assert report.valid

    def test_not_maximal(self, service):
        report = service.validate_antichain(Antichain.of([Word((1,)), Word((2, 1))]), 2)
        assert report.prefix_free
        assert not report.maximal
        assert report.coverage == 3 and report.expected_coverage == 4

    def test_prefix_violation(self, service):
        report = service.validate_antichain(Antichain.of([Word((1,)), Word((1, 2)), Word((2,))]), 2)
        assert not report.prefix_free
        assert not report.valid
        assert report.prefix_witness == '1 < 1.2'

    def test_prefix_of_lookup(self):
        antichain = Antichain.of([Word((1, 1)), Word((1, 2)), Word((2,))])
        assert antichain.prefix_of(Word((2, 1, 1))) == Word((2,))
