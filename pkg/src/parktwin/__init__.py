"""parktwin: a self-contained digital-twin middleware stack.

The package provides a latest-state context broker with publish-subscribe,
an Ultralight 2.0 IoT gateway, a dataflow/persistence pipeline, a streaming
analytics worker, an identity service with a policy-enforcement proxy, and
a deterministic parking simulation harness that drives all of them.
"""

__version__ = "0.1.0"
