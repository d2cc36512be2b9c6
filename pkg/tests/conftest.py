import pytest

from pvguard.corpus import fixture_lexicon
from pvguard.icsr import DateEntry, IcsrDocument, PatientInfo, ReporterInfo


@pytest.fixture(scope="session")
def lex():
    return fixture_lexicon()


def build_doc(**overrides) -> IcsrDocument:
    base = dict(
        case_id="case-1",
        language="ja",
        narrative="患者がアセトアミノフェンを服用した。頭痛が発現した。",
        structured_fields=(("country_of_occurrence", "JP"),),
        reporter=ReporterInfo(organization="City General Hospital", country="JP"),
        patient=PatientInfo(age=44.0, age_unit="years", sex="female"),
        reactions=("頭痛",),
        suspect_products=("アセトアミノフェン",),
        seriousness=frozenset({"hospitalization"}),
        dates=(DateEntry("onset", "2021-03-05"),),
    )
    base.update(overrides)
    return IcsrDocument(**base)


@pytest.fixture
def doc():
    return build_doc()
