import pytest
import requests

from parktwin.broker.api import BrokerApi
from parktwin.broker.client import BrokerClient
from parktwin.broker.core import ContextBroker
from parktwin.errors import AlreadyExists, NotFound, VersionConflict

from sampledocs import SPOT_DOC, VEHICLE_DOC


@pytest.fixture
def api():
    broker_api = BrokerApi(ContextBroker(backoff_base=0.01)).start()
    yield broker_api
    broker_api.broker.shutdown()
    broker_api.stop()


@pytest.fixture
def client(api):
    return BrokerClient(api.base_url)


class TestEntityEndpoints:
    def test_create_and_get_key_values(self, api, client):
        assert client.create_entity(VEHICLE_DOC) == 1
        doc, version = client.get_entity("vehicle:501")
        assert doc == VEHICLE_DOC
        assert version == 1

    def test_create_conflict(self, client):
        client.create_entity(VEHICLE_DOC)
        with pytest.raises(AlreadyExists):
            client.create_entity(VEHICLE_DOC)

    def test_normalized_representation(self, api, client):
        client.create_entity(VEHICLE_DOC)
        response = requests.get(f"{api.base_url}/v2/entities/vehicle:501")
        attr = response.json()["vehicleType"]
        assert attr == {"type": "Text", "value": "car", "metadata": {}}

    def test_patch_with_if_match(self, client):
        client.create_entity(SPOT_DOC)
        assert client.update_attrs("spot:51", {"status": "free"}, expected_version=1) == 2
        with pytest.raises(VersionConflict):
            client.update_attrs("spot:51", {"status": "closed"}, expected_version=1)

    def test_delete(self, client):
        client.create_entity(VEHICLE_DOC)
        client.delete_entity("vehicle:501")
        with pytest.raises(NotFound):
            client.get_entity("vehicle:501")

    def test_list_with_q_filter(self, client):
        client.create_entity(SPOT_DOC)
        client.create_entity({"id": "spot:7", "type": "ParkingSpot", "name": "7", "status": "free"})
        docs = client.list_entities(entity_type="ParkingSpot", q="status==occupied")
        assert [d["id"] for d in docs] == ["spot:51"]

    def test_list_with_id_pattern(self, client):
        client.create_entity(SPOT_DOC)
        client.create_entity(VEHICLE_DOC)
        docs = client.list_entities(id_pattern="spot:.*")
        assert [d["id"] for d in docs] == ["spot:51"]

    def test_bad_q_filter_rejected(self, api):
        response = requests.get(f"{api.base_url}/v2/entities", params={"q": "status>5"})
        assert response.status_code == 400
        assert response.json()["error"] == "BadFilter"

    def test_malformed_body_rejected(self, api):
        response = requests.post(
            f"{api.base_url}/v2/entities",
            data=b"not json",
            headers={"Content-Type": "application/json"},
        )
        assert response.status_code == 400

    def test_reserved_attr_name_rejected(self, api):
        response = requests.patch(
            f"{api.base_url}/v2/entities/x:1/attrs",
            json={"id": "nope"},
            params={"options": "keyValues"},
        )
        assert response.status_code == 400
        assert response.json()["error"] == "MalformedEntity"


class TestSubscriptionEndpoints:
    def test_subscription_lifecycle(self, client, sink):
        sub_id = client.create_subscription(
            {
                "subject": {"entities": [{"type": "ParkingSpot"}], "condition": {"attrs": ["status"]}},
                "notification": {"url": sink.url},
            }
        )
        subs = client.list_subscriptions()
        assert [s["id"] for s in subs] == [sub_id]
        assert subs[0]["status"] == "active"
        client.delete_subscription(sub_id)
        assert client.list_subscriptions() == []

    def test_weather_id_pattern_subscription_delivers(self, client, sink):
        client.create_subscription(
            {
                "subject": {"entities": [{"idPattern": "weatherForecast:.*"}]},
                "notification": {"url": sink.url},
            }
        )
        client.create_entity({"id": "weatherForecast:2020-08-03T09", "type": "WeatherForecast", "temperature": 27.5})
        assert client.pending_deliveries() >= 0
        deadline = 50
        while sink.hits == 0 and deadline:
            deadline -= 1
            import time

            time.sleep(0.02)
        assert len(sink.bodies) == 1
        assert sink.bodies[0]["data"][0]["id"] == "weatherForecast:2020-08-03T09"

    def test_queue_depth_endpoint(self, client):
        assert client.pending_deliveries() == 0


class TestUpsertAndAdjust:
    def test_upsert_creates_then_patches(self, client):
        client.upsert_entity(VEHICLE_DOC)
        client.upsert_entity(dict(VEHICLE_DOC, vehicleType="van"))
        doc, version = client.get_entity("vehicle:501")
        assert doc["vehicleType"] == "van"
        assert version == 2

    def test_adjust_number(self, client):
        client.create_entity({"id": "parking:1", "type": "OffStreetParking", "availableSpotNumber": 1450})
        assert client.adjust_number("parking:1", "availableSpotNumber", -1) == 1449
        doc, _ = client.get_entity("parking:1")
        assert doc["availableSpotNumber"] == 1449
