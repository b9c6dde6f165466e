"""
Base Repository Implementation - Single Responsibility Principle (SRP)
In-memory storage for immutable computed records
"""
from typing import Any, Dict, Generic, List, Optional, TypeVar

from core.exceptions import ValidationError
from core.interfaces.repository import IBulkRepository, IRepository

K = TypeVar('K')
T = TypeVar('T')


class BaseRepository(IRepository[K, T], Generic[K, T]):
    """
    Base repository with dict-backed storage
    Records are write-once: create() refuses to overwrite an existing key
    """

    def __init__(self):
        self._records: Dict[K, T] = {}

    def get_by_id(self, id: K) -> Optional[T]:
        """Get single record by key"""
        return self._records.get(id)

    def get_all(self, filters: Optional[Dict[str, Any]] = None) -> List[T]:
        """Get all records in key order"""
        records = [self._records[key] for key in sorted(self._records)]
        if filters:
            records = [
                record for record in records
                if all(getattr(record, attr, None) == value for attr, value in filters.items())
            ]
        return records

    def create(self, id: K, entity: T) -> T:
        """Store a new record"""
        if id in self._records:
            raise ValidationError(f"Record {id!s} already exists")
        self._records[id] = entity
        return entity

    def exists(self, id: K) -> bool:
        """Check if a record exists"""
        return id in self._records

    def count(self) -> int:
        return len(self._records)


class BulkRepository(BaseRepository[K, T], IBulkRepository[K, T], Generic[K, T]):
    """
    Repository with bulk operations support
    Liskov Substitution - Can be used wherever BaseRepository is expected
    """

    def bulk_create(self, items: Dict[K, T]) -> int:
        """Store many records at once"""
        clashes = [key for key in items if key in self._records]
        if clashes:
            raise ValidationError(f"{len(clashes)} records already exist", {'first': str(clashes[0])})
        self._records.update(items)
        return len(items)
