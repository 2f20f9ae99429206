"""Identity management, role/permission policy, and the enforcement proxy."""

from parktwin.auth.identity import IdentityService
from parktwin.auth.policy import Permission, PolicyTable, default_policy

__all__ = ["IdentityService", "Permission", "PolicyTable", "default_policy"]
