import threading

import pytest

from parktwin.agent.devices import DeviceRegistration, DeviceRegistry
from parktwin.agent.gateway import UltralightGateway
from parktwin.agent.ultralight import UlCommand
from parktwin.broker.api import BrokerApi
from parktwin.broker.client import BrokerClient
from parktwin.broker.core import ContextBroker
from parktwin.errors import DuplicateDevice, UnknownDevice
from parktwin.sim.defaults import (
    PARKING_DEVICE_KEY,
    bulb_actuator_route,
    parking_device_registration,
    parking_registry,
)

from sampledocs import (
    ARRIVAL_PAYLOAD,
    BULB_COMMAND_OCCUPIED,
    DEPARTURE_PAYLOAD,
    PARKING_DOC,
    SPOT_DOC,
    VEHICLE_DOC,
)


@pytest.fixture
def stack():
    api = BrokerApi(ContextBroker(backoff_base=0.01)).start()
    client = BrokerClient(api.base_url)
    client.create_entity(
        {"id": "parking:1", "type": "OffStreetParking", "availableSpotNumber": 1450, "totalSpotNumber": 1450}
    )
    gateway = UltralightGateway(client, parking_registry("http://127.0.0.1:9/bulb"))
    yield api, client, gateway
    api.broker.shutdown()
    api.stop()


class TestHandleMeasure:
    def test_arrival_fans_out_into_exactly_three_writes(self, stack):
        _, client, gateway = stack
        writes = gateway.handle_measure(PARKING_DEVICE_KEY, ARRIVAL_PAYLOAD)
        assert [w.as_document() for w in writes] == [VEHICLE_DOC, SPOT_DOC, PARKING_DOC]
        assert client.get_entity("vehicle:501")[0] == VEHICLE_DOC
        assert client.get_entity("spot:51")[0] == SPOT_DOC
        assert client.get_entity("parking:1")[0]["availableSpotNumber"] == 1449

    def test_departure_mirrors_arrival(self, stack):
        _, client, gateway = stack
        gateway.handle_measure(PARKING_DEVICE_KEY, ARRIVAL_PAYLOAD)
        writes = gateway.handle_measure(PARKING_DEVICE_KEY, DEPARTURE_PAYLOAD)
        assert len(writes) == 3
        spot, _ = client.get_entity("spot:51")
        assert spot["status"] == "free"
        assert spot["refVehicle"] == ""
        assert client.get_entity("parking:1")[0]["availableSpotNumber"] == 1450
        # vehicles are retained after departure
        assert client.get_entity("vehicle:501")[0] == VEHICLE_DOC

    def test_unknown_device_performs_zero_writes(self, stack):
        api, _, gateway = stack
        before = api.service.request_count
        with pytest.raises(UnknownDevice):
            gateway.handle_measure("ghost", ARRIVAL_PAYLOAD)
        assert api.service.request_count == before
        assert gateway.write_log == []

    def test_same_plate_reuses_vehicle_id(self, stack):
        _, client, gateway = stack
        gateway.handle_measure(PARKING_DEVICE_KEY, ARRIVAL_PAYLOAD)
        gateway.handle_measure(PARKING_DEVICE_KEY, DEPARTURE_PAYLOAD)
        gateway.handle_measure(PARKING_DEVICE_KEY, "id|123456|t|car|p|7")
        spot, _ = client.get_entity("spot:7")
        assert spot["refVehicle"] == "vehicle:501"

    def test_new_plates_get_sequential_ids(self, stack):
        _, client, gateway = stack
        gateway.handle_measure(PARKING_DEVICE_KEY, ARRIVAL_PAYLOAD)
        gateway.handle_measure(PARKING_DEVICE_KEY, "id|123457|t|car|p|52")
        spot, _ = client.get_entity("spot:52")
        assert spot["refVehicle"] == "vehicle:502"

    def test_concurrent_arrivals_decrement_exactly(self, stack):
        _, client, gateway = stack
        spots = list(range(100, 140))
        threads = [
            threading.Thread(
                target=gateway.handle_measure,
                args=(PARKING_DEVICE_KEY, f"id|{200000 + n}|t|car|p|{n}"),
                kwargs={"sensor_id": f"sensor-{n}"},
            )
            for n in spots
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert client.get_entity("parking:1")[0]["availableSpotNumber"] == 1450 - len(spots)


class TestHandleNotification:
    def _notification(self, status, extra=None):
        doc = {"id": "spot:51", "type": "ParkingSpot", "name": "51", "status": status}
        if extra:
            doc = extra
        return {"subscriptionId": "sub-1", "data": [doc]}

    def test_occupied_sends_yellow(self, stack, sink):
        _, client, gateway = stack
        gateway.registry = parking_registry(sink.url)
        sent = gateway.handle_notification(self._notification("occupied"))
        assert sent == [UlCommand("bulb:0051", "light", "yellow")]
        assert gateway.command_log[-1].delivered

    def test_color_code_total(self, stack):
        _, _, gateway = stack
        for status, color in [("closed", "red"), ("occupied", "yellow"), ("free", "green")]:
            sent = gateway.handle_notification(self._notification(status))
            assert sent == [UlCommand("bulb:0051", "light", color)]

    def test_no_status_attr_sends_nothing(self, stack):
        _, _, gateway = stack
        body = {"subscriptionId": "s", "data": [{"id": "spot:51", "type": "ParkingSpot", "name": "51"}]}
        assert gateway.handle_notification(body) == []

    def test_unrelated_type_ignored(self, stack):
        _, _, gateway = stack
        body = {"subscriptionId": "s", "data": [{"id": "vehicle:501", "type": "Vehicle"}]}
        assert gateway.handle_notification(body) == []

    def test_unknown_status_value_skipped(self, stack):
        _, _, gateway = stack
        assert gateway.handle_notification(self._notification("sideways")) == []

    def test_singleton_command_device(self, stack, sink):
        _, _, gateway = stack
        gateway.register_device(
            DeviceRegistration.from_json(
                {
                    "deviceKey": "gate:main",
                    "entityTemplate": {"idTemplate": "gate:1", "type": "Gate"},
                    "commands": {"set": "position"},
                    "southboundUrl": sink.url,
                }
            )
        )
        body = {"subscriptionId": "s", "data": [{"id": "gate:1", "type": "Gate", "position": "open"}]}
        sent = gateway.handle_notification(body)
        assert sent == [UlCommand("gate:main", "set", "open")]
        assert sink.bodies == ["gate:main@set|open"]

    def test_command_device_requires_literal_id(self):
        with pytest.raises(Exception):
            DeviceRegistration.from_json(
                {
                    "deviceKey": "x",
                    "entityTemplate": {"idTemplate": "gate:{n}", "type": "Gate"},
                    "commands": {"set": "position"},
                }
            )


class TestRegistry:
    def test_duplicate_key_rejected(self):
        registry = DeviceRegistry()
        registry.register(parking_device_registration())
        with pytest.raises(DuplicateDevice):
            registry.register(parking_device_registration())

    def test_registration_file_round_trip(self, tmp_path):
        registry = parking_registry("http://127.0.0.1:9/bulb")
        path = tmp_path / "devices.json"
        registry.save(path)
        reloaded = DeviceRegistry.load(path)
        assert reloaded.to_json() == registry.to_json()

    def test_register_then_measure_succeeds(self, stack):
        _, client, _ = stack
        gateway = UltralightGateway(client, DeviceRegistry())
        gateway.register_device(parking_device_registration("lot-2"))
        writes = gateway.handle_measure("lot-2", ARRIVAL_PAYLOAD)
        assert len(writes) == 3

    def test_adjust_delta_must_be_nonzero(self):
        with pytest.raises(Exception):
            DeviceRegistration.from_json(
                {
                    "deviceKey": "x",
                    "entityTemplate": {"idTemplate": "e:{id}", "type": "T"},
                    "expansionRules": [
                        {
                            "trigger": "p",
                            "actions": [
                                {
                                    "targetIdTemplate": "t:1",
                                    "targetType": "T",
                                    "adjust": {"attrName": "n", "delta": 0},
                                }
                            ],
                        }
                    ],
                }
            )
