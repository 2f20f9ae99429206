"""Default parking-twin wiring: device registration, actuator route, weather mapping.

One logical sensor network covers the lot (device key ``parking-sensors``);
each spot sensor reports under its own ``i`` parameter. An arrival measure
``id|<plate>|t|<kind>|p|<spot>`` fans out into three writes: the vehicle
upsert (ids allocated sequentially from 501, memoized by plate), the spot
update, and the lot counter decrement. Departures mirror it under the key
``d``. Bulb device ids are the spot number zero-padded to four digits.
"""

from __future__ import annotations

from parktwin.agent.devices import ActuatorRoute, DeviceRegistration, DeviceRegistry

PARKING_DEVICE_KEY = "parking-sensors"
PARKING_ENTITY_ID = "parking:1"
VEHICLE_SEQ_START = 501

SPOT_COLOR = {"closed": "red", "occupied": "yellow", "free": "green"}


def parking_device_registration(device_key: str = PARKING_DEVICE_KEY) -> DeviceRegistration:
    return DeviceRegistration.from_json(
        {
            "deviceKey": device_key,
            "entityTemplate": {"idTemplate": "vehicle:{seq}", "type": "Vehicle"},
            "idSequence": {"start": VEHICLE_SEQ_START, "memoBy": "id"},
            "attrMap": {"id": "vehiclePlateIdentifier", "t": "vehicleType"},
            "expansionRules": [
                {
                    "trigger": "p",
                    "actions": [
                        {
                            "targetIdTemplate": "spot:{p}",
                            "targetType": "ParkingSpot",
                            "setAttrs": {
                                "name": "{p}",
                                "status": "occupied",
                                "refVehicle": "{entity_id}",
                                "refOffStreetParking": PARKING_ENTITY_ID,
                            },
                        },
                        {
                            "targetIdTemplate": PARKING_ENTITY_ID,
                            "targetType": "OffStreetParking",
                            "adjust": {"attrName": "availableSpotNumber", "delta": -1},
                        },
                    ],
                },
                {
                    "trigger": "d",
                    "actions": [
                        {
                            "targetIdTemplate": "spot:{d}",
                            "targetType": "ParkingSpot",
                            "setAttrs": {"status": "free", "refVehicle": ""},
                        },
                        {
                            "targetIdTemplate": PARKING_ENTITY_ID,
                            "targetType": "OffStreetParking",
                            "adjust": {"attrName": "availableSpotNumber", "delta": 1},
                        },
                    ],
                },
            ],
        }
    )


def bulb_actuator_route(southbound_url: str) -> ActuatorRoute:
    return ActuatorRoute.from_json(
        {
            "entityType": "ParkingSpot",
            "watchAttr": "status",
            "command": "light",
            "deviceIdTemplate": "bulb:{name:0>4}",
            "valueMap": dict(SPOT_COLOR),
            "southboundUrl": southbound_url,
        }
    )


def parking_registry(bulb_url: str, device_key: str = PARKING_DEVICE_KEY) -> DeviceRegistry:
    registry = DeviceRegistry()
    registry.register(parking_device_registration(device_key))
    registry.add_route(bulb_actuator_route(bulb_url))
    return registry


def weather_mapping() -> dict:
    """Declarative transform from the external weather API onto WeatherForecast."""
    return {
        "targetType": "WeatherForecast",
        "idTemplate": "weatherForecast:{clock_hour}",
        "fieldMaps": [
            {"sourcePath": "temp", "targetAttr": "temperature", "cast": "number"},
            {"sourcePath": "precipitation", "targetAttr": "precipitationProbability", "cast": "number"},
            {"sourcePath": "tempmax", "targetAttr": "dayMaximum.temperature", "cast": "number"},
            {"sourcePath": "tempmin", "targetAttr": "dayMinimum.temperature", "cast": "number"},
            {"sourcePath": "wind.speed", "targetAttr": "windSpeed", "cast": "number"},
        ],
        "constants": {"validFrom": "{clock_hour_start}", "validTo": "{clock_hour_end}"},
    }
