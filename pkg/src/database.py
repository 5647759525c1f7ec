from pathlib import Path
import os
import logging

from sqlalchemy import create_engine, select
from sqlalchemy.orm import sessionmaker, scoped_session, declarative_base

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = PROJECT_ROOT / "data"


def database_path(environ=os.environ) -> Path:
    """Cache file: test_densities.db under TESTING, else DATABASE_PATH; relative names live in data/"""
    if environ.get("TESTING", "False").lower() == "true":
        path = Path("test_densities.db")
    else:
        path = Path(environ.get("DATABASE_PATH", "densities.db"))
    if not path.is_absolute():
        path = DATA_DIR / path
    return path


def get_database_url(environ=os.environ) -> str:
    path = database_path(environ)
    path.parent.mkdir(parents=True, exist_ok=True)
    logger.debug(f"Local factor cache at {path}")
    return f"sqlite:///{path}"


DATABASE_URL = get_database_url()

engine = create_engine(DATABASE_URL, connect_args={"check_same_thread": False}, pool_pre_ping=True)

SessionLocal = scoped_session(sessionmaker(autocommit=False, autoflush=False, bind=engine))
Base = declarative_base()


def init_db():
    """Create the cache tables and the single sweep statistics row"""
    from src.models import SweepStatistics

    Base.metadata.create_all(bind=engine)
    db = SessionLocal()
    try:
        if db.scalars(select(SweepStatistics)).first() is None:
            db.add(SweepStatistics(received_count=0, computed_count=0, duplicate_dropped=0))
            db.commit()
            logger.info("Initialized sweep statistics")
    except Exception as e:
        logger.error(f"Error initializing sweep statistics: {e}")
        db.rollback()
        raise
    finally:
        db.close()
