import pytest
import os
import sys
from pathlib import Path

# Add project root to path
sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

# Set testing mode BEFORE importing anything else
os.environ["TESTING"] = "True"

from src.aggregate import load_references, load_weil_fixtures
from src.database import Base, engine, SessionLocal
from src.models import LocalFactorRecord, SweepStatistics
from src.weilpoly import parse_weil

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session", autouse=True)
def setup_test_environment():
    """Setup test environment once for all tests"""
    print("\n" + "="*70)
    print("SETTING UP TEST ENVIRONMENT")
    print("="*70)

    # Verify we're using test database
    from src.database import DATABASE_URL
    print(f"Test Database: {DATABASE_URL}")
    assert "test" in DATABASE_URL.lower(), "Should use test database!"

    yield

    print("\n" + "="*70)
    print("TEARING DOWN TEST ENVIRONMENT")
    print("="*70)


@pytest.fixture(scope="function")
def clean_db():
    """Clean database before each test"""
    Base.metadata.drop_all(bind=engine)
    Base.metadata.create_all(bind=engine)

    db = SessionLocal()
    try:
        db.query(LocalFactorRecord).delete()
        db.query(SweepStatistics).delete()
        db.commit()
    finally:
        db.close()

    yield

    db = SessionLocal()
    try:
        db.query(LocalFactorRecord).delete()
        db.query(SweepStatistics).delete()
        db.commit()
    finally:
        db.close()


@pytest.fixture(scope="session")
def weil_fixtures():
    return load_weil_fixtures(FIXTURE_DIR / "weil_polynomials.jsonl")


@pytest.fixture(scope="session")
def reference_fixtures():
    return load_references(FIXTURE_DIR / "class_numbers.jsonl")


def _load(fixtures, label):
    fixture = fixtures[label]
    return parse_weil(fixture.coeffs, fixture.q, label=fixture.label)


@pytest.fixture(scope="session")
def cm19(weil_fixtures):
    """Sextic CM field inside Q(zeta_19), q = 7"""
    return _load(weil_fixtures, "cm19_q7")


@pytest.fixture(scope="session")
def zeta7_plus(weil_fixtures):
    return _load(weil_fixtures, "zeta7_q2_plus")


@pytest.fixture(scope="session")
def zeta7_minus(weil_fixtures):
    return _load(weil_fixtures, "zeta7_q2_minus")


@pytest.fixture(scope="session")
def noncyclic(weil_fixtures):
    return _load(weil_fixtures, "noncyclic_q2")


@pytest.fixture(scope="session")
def genus5(weil_fixtures):
    return _load(weil_fixtures, "g5_q3_power")


@pytest.fixture(scope="session")
def genus1(weil_fixtures):
    return _load(weil_fixtures, "g1_q2_sqrt7")


@pytest.fixture(scope="session")
def sextic_fixtures(weil_fixtures):
    """Every cyclic genus 3 fixture"""
    labels = ["cm19_q7", "cm19_q7_twist", "zeta7_q2_plus", "zeta7_q2_plus_twist", "zeta7_q2_minus"]
    return [_load(weil_fixtures, label) for label in labels]
