from sqlalchemy import Boolean, Column, DateTime, Index, Integer, String, Text
from src.database import Base
from datetime import datetime


class LocalFactorRecord(Base):
    __tablename__ = "local_factors"

    id = Column(Integer, primary_key=True, autoincrement=True)
    label = Column(String(255), nullable=False, index=True)
    ell = Column(Integer, nullable=False)
    kind = Column(String(8), nullable=False, default="ell")
    shape = Column(String(64), nullable=True)
    nu_f = Column(Text, nullable=True)
    nu_k = Column(Text, nullable=True)
    matched = Column(Boolean, nullable=True)
    error = Column(Text, nullable=True)
    computed_at = Column(DateTime, default=datetime.utcnow)

    __table_args__ = (
        Index('idx_label_ell', 'label', 'ell', unique=True),
    )


class SweepStatistics(Base):
    __tablename__ = "sweep_statistics"

    id = Column(Integer, primary_key=True)
    received_count = Column(Integer, default=0)
    computed_count = Column(Integer, default=0)
    duplicate_dropped = Column(Integer, default=0)
    last_updated = Column(DateTime, default=datetime.utcnow, onupdate=datetime.utcnow)
