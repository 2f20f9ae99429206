import logging

import pytest
import requests

from parktwin.auth.identity import IdentityService
from parktwin.auth.identity_api import IdentityApi
from parktwin.auth.policy import Permission, PolicyTable, default_policy
from parktwin.auth.proxy import HttpIntrospector, PepProxy
from parktwin.broker.api import BrokerApi
from parktwin.broker.client import BrokerClient
from parktwin.broker.core import ContextBroker
from parktwin.clock import ManualClock
from parktwin.errors import DuplicateUser, Forbidden, InvalidCredentials, UnknownUser

from sampledocs import SPOT_DOC

USERS = [
    {"username": "alice", "password": "admin-pw", "roles": ["admin"]},
    {"username": "sam", "password": "super-pw", "roles": ["supervisor"]},
    {"username": "gus", "password": "general-pw", "roles": ["general"]},
]


@pytest.fixture
def clock():
    return ManualClock()


@pytest.fixture
def identity(clock):
    return IdentityService.from_config({"users": USERS}, clock=clock)


class TestTokens:
    def test_issue_and_introspect(self, identity):
        grant = identity.issue_token("sam", "super-pw")
        result = identity.introspect(grant["access_token"])
        assert result == {"active": True, "username": "sam", "roles": ["supervisor"]}

    def test_wrong_password(self, identity):
        with pytest.raises(InvalidCredentials) as wrong:
            identity.issue_token("sam", "nope")
        with pytest.raises(InvalidCredentials) as unknown:
            identity.issue_token("nobody", "nope")
        # identical shape: no way to tell a bad user from a bad password
        assert str(wrong.value) == str(unknown.value)

    def test_expired_token_inactive(self, identity, clock):
        grant = identity.issue_token("sam", "super-pw")
        clock.advance(3601)
        assert identity.introspect(grant["access_token"]) == {"active": False}

    def test_random_token_inactive(self, identity):
        assert identity.introspect("not-a-token") == {"active": False}

    def test_token_unguessable_length(self, identity):
        token = identity.issue_token("sam", "super-pw")["access_token"]
        assert len(token) >= 32  # >= 256 bits before encoding

    def test_deleted_user_tokens_go_inactive(self, identity):
        admin = identity.issue_token("alice", "admin-pw")["access_token"]
        token = identity.issue_token("gus", "general-pw")["access_token"]
        identity.delete_user(admin, "gus")
        assert identity.introspect(token) == {"active": False}

    def test_role_change_visible_on_next_introspection(self, identity):
        admin = identity.issue_token("alice", "admin-pw")["access_token"]
        token = identity.issue_token("gus", "general-pw")["access_token"]
        identity.assign_role(admin, "gus", "supervisor")
        assert identity.introspect(token)["roles"] == ["general", "supervisor"]


class TestSubjectManagement:
    def test_admin_creates_supervisor(self, identity):
        admin = identity.issue_token("alice", "admin-pw")["access_token"]
        identity.create_user(admin, "u2", "pw2", ["supervisor"])
        grant = identity.issue_token("u2", "pw2")
        assert identity.introspect(grant["access_token"])["roles"] == ["supervisor"]

    def test_supervisor_cannot_create(self, identity):
        token = identity.issue_token("sam", "super-pw")["access_token"]
        with pytest.raises(Forbidden):
            identity.create_user(token, "u3", "pw3", [])

    def test_delete_unknown_user(self, identity):
        admin = identity.issue_token("alice", "admin-pw")["access_token"]
        with pytest.raises(UnknownUser):
            identity.delete_user(admin, "ghost")

    def test_duplicate_user(self, identity):
        admin = identity.issue_token("alice", "admin-pw")["access_token"]
        with pytest.raises(DuplicateUser):
            identity.create_user(admin, "sam", "x", [])


class TestPolicyCheck:
    def test_matrix(self):
        policy = default_policy()
        patch_path = "/v2/entities/spot:51/attrs"
        list_path = "/v2/entities"
        cases = [
            ("admin", "PATCH", patch_path, True),
            ("admin", "GET", list_path, True),
            ("supervisor", "PATCH", patch_path, True),
            ("supervisor", "GET", list_path, True),
            ("general", "PATCH", patch_path, False),
            ("general", "GET", list_path, True),
        ]
        for role, action, path, expected in cases:
            assert policy.check([role], action, path) is expected, (role, action, path)

    def test_default_deny_empty_permissions(self):
        policy = PolicyTable({})
        assert not policy.check(["admin"], "GET", "/v2/entities")

    def test_exact_and_prefix_patterns(self):
        policy = PolicyTable({"r": [Permission("GET", "/a"), Permission("GET", "/b/*")]})
        assert policy.check(["r"], "GET", "/a")
        assert not policy.check(["r"], "GET", "/a/x")
        assert policy.check(["r"], "GET", "/b/deep/path")
        assert not policy.check(["r"], "POST", "/a")

    def test_check_is_pure(self):
        policy = default_policy()
        first = policy.check(["general"], "PATCH", "/v2/entities/spot:1/attrs")
        second = policy.check(["general"], "PATCH", "/v2/entities/spot:1/attrs")
        assert first == second == False  # noqa: E712

    def test_config_alias_round_trip(self, tmp_path):
        config = {
            "roles": {
                "admin": ["parkingSpot.update", "parkingSpot.retrieve"],
                "watcher": [{"action": "GET", "resource": "/v2/subscriptions"}],
            }
        }
        import json

        path = tmp_path / "policy.json"
        path.write_text(json.dumps(config))
        policy = PolicyTable.from_file(path)
        assert policy.check(["watcher"], "GET", "/v2/subscriptions")
        assert policy.check(["admin"], "PATCH", "/v2/entities/spot:9/attrs")


@pytest.fixture
def secured_stack(clock):
    broker_api = BrokerApi(ContextBroker(backoff_base=0.01)).start()
    identity = IdentityService.from_config({"users": USERS}, clock=clock)
    identity_api = IdentityApi(identity).start()
    proxy = PepProxy(
        upstream_url=broker_api.base_url,
        introspect=HttpIntrospector(identity_api.base_url),
        policy=default_policy(),
        identity_hint_url=identity_api.base_url,
    ).start()
    client = BrokerClient(broker_api.base_url)
    client.create_entity(SPOT_DOC)
    yield broker_api, identity_api, proxy
    proxy.stop()
    identity_api.stop()
    broker_api.broker.shutdown()
    broker_api.stop()


def login(identity_api, username, password):
    response = requests.post(
        f"{identity_api.base_url}/oauth/token",
        data={"grant_type": "password", "username": username, "password": password},
    )
    assert response.status_code == 200
    return response.json()["access_token"]


class TestProxy:
    def test_no_token_gets_challenge(self, secured_stack):
        _, identity_api, proxy = secured_stack
        response = requests.get(f"{proxy.base_url}/v2/entities")
        assert response.status_code == 401
        assert response.headers["WWW-Authenticate"].startswith("Bearer")
        assert response.json()["identityEndpoint"] == identity_api.base_url + "/oauth/token"

    def test_general_user_reads_through(self, secured_stack):
        _, identity_api, proxy = secured_stack
        token = login(identity_api, "gus", "general-pw")
        response = requests.get(
            f"{proxy.base_url}/v2/entities",
            params={"type": "ParkingSpot", "options": "keyValues"},
            headers={"Authorization": f"Bearer {token}"},
        )
        assert response.status_code == 200
        assert response.json() == [SPOT_DOC]

    def test_general_user_patch_denied_zero_upstream_calls(self, secured_stack):
        broker_api, identity_api, proxy = secured_stack
        token = login(identity_api, "gus", "general-pw")
        before = broker_api.service.request_count
        response = requests.patch(
            f"{proxy.base_url}/v2/entities/spot:51/attrs",
            json={"status": "closed"},
            params={"options": "keyValues"},
            headers={"Authorization": f"Bearer {token}"},
        )
        assert response.status_code == 403
        assert broker_api.service.request_count == before

    def test_supervisor_patch_allowed(self, secured_stack):
        broker_api, identity_api, proxy = secured_stack
        token = login(identity_api, "sam", "super-pw")
        response = requests.patch(
            f"{proxy.base_url}/v2/entities/spot:51/attrs",
            json={"status": "closed"},
            params={"options": "keyValues"},
            headers={"Authorization": f"Bearer {token}"},
        )
        assert response.status_code == 204
        doc, _ = BrokerClient(broker_api.base_url).get_entity("spot:51")
        assert doc["status"] == "closed"

    def test_invalid_token_rejected(self, secured_stack):
        _, _, proxy = secured_stack
        response = requests.get(
            f"{proxy.base_url}/v2/entities", headers={"Authorization": "Bearer bogus"}
        )
        assert response.status_code == 401

    def test_expired_token_rejected(self, secured_stack, clock):
        _, identity_api, proxy = secured_stack
        token = login(identity_api, "gus", "general-pw")
        clock.advance(3601)
        response = requests.get(
            f"{proxy.base_url}/v2/entities", headers={"Authorization": f"Bearer {token}"}
        )
        assert response.status_code == 401

    def test_upstream_address_never_disclosed(self, secured_stack):
        broker_api, identity_api, proxy = secured_stack
        token = login(identity_api, "gus", "general-pw")
        upstream = broker_api.base_url
        for path, kwargs in [
            ("/v2/entities", {"headers": {"Authorization": f"Bearer {token}"}}),
            ("/v2/entities", {}),
            ("/v2/entities/ghost:1", {"headers": {"Authorization": f"Bearer {token}"}}),
        ]:
            response = requests.get(f"{proxy.base_url}{path}", **kwargs)
            assert upstream not in response.text
            for value in response.headers.values():
                assert upstream not in value

    def test_upstream_down_gives_502(self, secured_stack):
        _, identity_api, _ = secured_stack
        token = login(identity_api, "gus", "general-pw")
        dead = PepProxy(
            upstream_url="http://127.0.0.1:9",
            introspect=HttpIntrospector(identity_api.base_url),
            policy=default_policy(),
        ).start()
        try:
            response = requests.get(
                f"{dead.base_url}/v2/entities", headers={"Authorization": f"Bearer {token}"}
            )
            assert response.status_code == 502
        finally:
            dead.stop()

    def test_no_token_material_in_logs(self, secured_stack, caplog):
        _, identity_api, proxy = secured_stack
        with caplog.at_level(logging.DEBUG):
            token = login(identity_api, "gus", "general-pw")
            requests.get(
                f"{proxy.base_url}/v2/entities", headers={"Authorization": f"Bearer {token}"}
            )
            requests.patch(
                f"{proxy.base_url}/v2/entities/spot:51/attrs",
                json={"status": "closed"},
                headers={"Authorization": f"Bearer {token}"},
            )
        assert token not in caplog.text
        assert "general-pw" not in caplog.text


class TestIdentityApi:
    def test_password_grant_over_http(self, secured_stack):
        _, identity_api, _ = secured_stack
        token = login(identity_api, "alice", "admin-pw")
        response = requests.post(f"{identity_api.base_url}/oauth/introspect", data={"token": token})
        assert response.json()["roles"] == ["admin"]

    def test_credential_failures_identical_shape(self, secured_stack):
        _, identity_api, _ = secured_stack
        bad_pw = requests.post(
            f"{identity_api.base_url}/oauth/token",
            data={"grant_type": "password", "username": "alice", "password": "x"},
        )
        no_user = requests.post(
            f"{identity_api.base_url}/oauth/token",
            data={"grant_type": "password", "username": "zz", "password": "x"},
        )
        assert bad_pw.status_code == no_user.status_code == 400
        assert bad_pw.json() == no_user.json()

    def test_unsupported_grant(self, secured_stack):
        _, identity_api, _ = secured_stack
        response = requests.post(
            f"{identity_api.base_url}/oauth/token", data={"grant_type": "client_credentials"}
        )
        assert response.status_code == 400
        assert response.json()["error"] == "unsupported_grant_type"

    def test_user_management_over_http(self, secured_stack):
        _, identity_api, _ = secured_stack
        admin = login(identity_api, "alice", "admin-pw")
        headers = {"Authorization": f"Bearer {admin}"}
        created = requests.post(
            f"{identity_api.base_url}/users",
            json={"username": "u2", "password": "pw2", "roles": ["supervisor"]},
            headers=headers,
        )
        assert created.status_code == 201
        assert login(identity_api, "u2", "pw2")
        assigned = requests.post(f"{identity_api.base_url}/users/u2/roles/general", headers=headers)
        assert assigned.status_code == 204
        revoked = requests.delete(f"{identity_api.base_url}/users/u2/roles/general", headers=headers)
        assert revoked.status_code == 204
        deleted = requests.delete(f"{identity_api.base_url}/users/u2", headers=headers)
        assert deleted.status_code == 204

    def test_non_admin_create_forbidden_over_http(self, secured_stack):
        _, identity_api, _ = secured_stack
        sam = login(identity_api, "sam", "super-pw")
        response = requests.post(
            f"{identity_api.base_url}/users",
            json={"username": "u9", "password": "pw"},
            headers={"Authorization": f"Bearer {sam}"},
        )
        assert response.status_code == 403
