"""Pydantic models for the websocket wire protocol and REST responses."""

from __future__ import annotations

from typing import List, Literal, Optional, Union

from pydantic import BaseModel, Field, TypeAdapter

PROTOCOL_VERSION = 1


class HelloFrame(BaseModel):
    type: Literal["hello"]
    version: int


class VerbalFrame(BaseModel):
    type: Literal["verbal"]
    text: str


class PointFrame(BaseModel):
    type: Literal["point"]
    target: List[float] = Field(min_length=2, max_length=2)


class PostureFrame(BaseModel):
    type: Literal["posture"]
    name: str


class LureFrame(BaseModel):
    type: Literal["lure"]
    rod: List[float] = Field(min_length=3, max_length=3)


class ModeFrame(BaseModel):
    type: Literal["mode"]
    value: Literal["teach", "deploy"]


class ResetFrame(BaseModel):
    type: Literal["reset"]


class SaveFrame(BaseModel):
    type: Literal["save"]


ClientFrame = Union[HelloFrame, VerbalFrame, PointFrame, PostureFrame,
                    LureFrame, ModeFrame, ResetFrame, SaveFrame]

client_frame_adapter: TypeAdapter = TypeAdapter(ClientFrame)


class RobotStateOut(BaseModel):
    px: float
    py: float
    pz: float
    yaw: float
    speed: float
    standing: bool
    airborne: bool


class ObstacleOut(BaseModel):
    kind: str
    x: float
    y: float
    yaw: float
    dims: List[float]


class ServerHello(BaseModel):
    type: Literal["hello"] = "hello"
    version: int = PROTOCOL_VERSION
    mode: str
    scene_id: str


class StateFrame(BaseModel):
    type: Literal["state"] = "state"
    t: float
    tick: int
    robot: RobotStateOut
    obstacles: List[ObstacleOut]
    goal: Optional[List[float]]
    trail: List[List[float]]
    mode: str
    recording: bool


class AckFrame(BaseModel):
    type: Literal["ack"] = "ack"
    of: str
    detail: str = ""


class ErrorFrame(BaseModel):
    type: Literal["error"] = "error"
    message: str


class HealthResponse(BaseModel):
    status: str
    version: str
    protocol: int


class SceneResponse(BaseModel):
    id: str
    bounds_m: float
    obstacles: List[ObstacleOut]
    tiles: List[float]


class ModelInfoResponse(BaseModel):
    loaded: bool
    layers: Optional[List[int]] = None
    activation: Optional[str] = None
