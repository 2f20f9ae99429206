"""Latest-state context broker with publish-subscribe."""

from parktwin.broker.core import ContextBroker
from parktwin.broker.store import EntityStore
from parktwin.broker.subscriptions import Subscription, SubscriptionRegistry, match
from parktwin.broker.client import BrokerClient

__all__ = [
    "ContextBroker",
    "EntityStore",
    "Subscription",
    "SubscriptionRegistry",
    "match",
    "BrokerClient",
]
