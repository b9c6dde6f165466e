"""
Repository Interface - Following Interface Segregation Principle (ISP)
Repositories hold computed domain records addressed by a key
"""
from abc import ABC, abstractmethod
from typing import Any, Dict, Generic, List, Optional, TypeVar

K = TypeVar('K')
T = TypeVar('T')


class IRepository(ABC, Generic[K, T]):
    """
    Base repository interface - Dependency Inversion Principle (DIP)
    High-level services depend on this abstraction, not on the storage
    """

    @abstractmethod
    def get_by_id(self, id: K) -> Optional[T]:
        """Get single record by key"""
        pass

    @abstractmethod
    def get_all(self, filters: Optional[Dict[str, Any]] = None) -> List[T]:
        """Get all records in key order, optionally filtered by attribute values"""
        pass

    @abstractmethod
    def create(self, id: K, entity: T) -> T:
        """Store a new record"""
        pass

    @abstractmethod
    def exists(self, id: K) -> bool:
        """Check if a record exists"""
        pass

    @abstractmethod
    def count(self) -> int:
        """Number of stored records"""
        pass


class IBulkRepository(ABC, Generic[K, T]):
    """
    Bulk operations interface - Interface Segregation
    """

    @abstractmethod
    def bulk_create(self, items: Dict[K, T]) -> int:
        """Store many records, return how many were written"""
        pass
