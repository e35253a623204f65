"""Deterministic 2D forklift-robot simulation and grounding functions.

The robot is a disc with a heading, two wheel channels (linear speed
and spin), a gripper, a lift stage, a voice, and a forward rangefinder.
Grounding functions are timed actions started by the interpreter and
advanced once per tick; they report RUNNING/DONE/FAILED when polled.

Resource arbitration is per actuator: a claim from a younger focus
displaces an older focus's running actions on the same actuator (the
displaced actions fail). Actions from the same focus may share the
wheels, one per channel, which is what turns drive+turn into an arc.

All motion uses the closed-form unicycle step per tick, so endpoints
match analytic arcs to float precision. Translation stops at contact
with walls, obstacles, or loose objects; rotation is never blocked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .config import DEFAULT_CONFIG, EngineConfig


class WorldError(ValueError):
    pass


FORWARD_WORDS = frozenset({"forward", "forwards"})
BACKWARD_WORDS = frozenset({"backward", "backwards"})
LEFT_WORDS = frozenset({"left", "counterclockwise"})
RIGHT_WORDS = frozenset({"right", "clockwise"})
SLOW_WORDS = frozenset({"slowly", "slow"})
QUICK_WORDS = frozenset({"quickly", "quick", "fast"})

RUNNING = "RUNNING"
DONE = "DONE"
FAILED = "FAILED"


@dataclass
class WorldObject:
    name: str
    x: float
    y: float
    radius: float
    graspable: bool = True
    held: bool = False


@dataclass
class Obstacle:
    x: float
    y: float
    radius: float


@dataclass
class World:
    xmin: float = 0.0
    ymin: float = 0.0
    xmax: float = 4.0
    ymax: float = 4.0
    obstacles: list[Obstacle] = field(default_factory=list)
    objects: list[WorldObject] = field(default_factory=list)
    robot_x: float = 1.0
    robot_y: float = 1.0
    robot_heading: float = 0.0

    def validate(self) -> None:
        if self.xmax <= self.xmin or self.ymax <= self.ymin:
            raise WorldError("degenerate bounds")
        for obj in self.objects:
            for obs in self.obstacles:
                if math.hypot(obj.x - obs.x, obj.y - obs.y) < obj.radius + obs.radius:
                    raise WorldError(f"object {obj.name!r} overlaps an obstacle")


def parse_world(text: str) -> World:
    """Load a world description.

    Line forms: `bounds xmin ymin xmax ymax`, `robot x y heading`,
    `obstacle x y radius`, `object name x y radius [graspable|fixed]`.
    """
    world = World()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "bounds" and len(parts) == 5:
                world.xmin, world.ymin, world.xmax, world.ymax = map(float, parts[1:])
            elif parts[0] == "robot" and len(parts) == 4:
                world.robot_x, world.robot_y = float(parts[1]), float(parts[2])
                world.robot_heading = float(parts[3])
            elif parts[0] == "obstacle" and len(parts) == 4:
                world.obstacles.append(Obstacle(*map(float, parts[1:])))
            elif parts[0] == "object" and len(parts) in (5, 6):
                graspable = len(parts) < 6 or parts[5] == "graspable"
                world.objects.append(
                    WorldObject(parts[1].lower(), float(parts[2]), float(parts[3]), float(parts[4]), graspable)
                )
            else:
                raise WorldError(f"line {lineno}: bad world entry {line!r}")
        except ValueError as err:
            raise WorldError(f"line {lineno}: {err}") from None
    world.validate()
    return world


@dataclass
class ActionArgs:
    """Modifier tags harvested from an act node's argument graph."""

    dirs: frozenset[str] = frozenset()
    degs: frozenset[str] = frozenset()
    text: Optional[str] = None
    target: Optional[str] = None  # lex tags of an object argument, if any


@dataclass
class _Action:
    aid: int
    name: str
    actuator: str
    channel: str
    focus: int
    directive: int
    status: str = RUNNING
    timer: int = 0
    speed: float = 0.0  # wheels/drive channel
    spin: float = 0.0  # wheels/turn channel
    # drive stall tracking
    trail: list[tuple[float, float]] = field(default_factory=list)
    contact_ticks: list[bool] = field(default_factory=list)
    # gripper/lift deferred effect
    pending_obj: Optional[WorldObject] = None
    lift_delta: float = 0.0


_ACTUATORS = {
    "base_drive": ("wheels", "drive"),
    "base_turn": ("wheels", "turn"),
    "base_grab": ("gripper", "gripper"),
    "base_release": ("gripper", "gripper"),
    "base_lift": ("lift", "lift"),
    "base_lower": ("lift", "lift"),
    "base_say": ("voice", "voice"),
}


class Kernel:
    """Simulation state, grounding actions, and the rangefinder."""

    def __init__(self, world: World, config: EngineConfig = DEFAULT_CONFIG):
        self.config = config
        self.reset(world)

    def reset(self, world: World) -> None:
        self.world = world
        self.x = world.robot_x
        self.y = world.robot_y
        self.heading = world.robot_heading
        self.lift = 0.0
        self.holding: Optional[WorldObject] = None
        self.actions: list[_Action] = []
        self._finished: dict[int, str] = {}
        self.speech: list[tuple[int, int, str]] = []  # (focus, directive, text)
        self._next_aid = 1
        self._last_proximity_tick: Optional[int] = None
        self._reading: Optional[float] = None

    # -- grounding entry points ------------------------------------------

    def known_function(self, name: str) -> bool:
        return name in _ACTUATORS

    def start(self, name: str, args: ActionArgs, focus: int, directive: int) -> Optional[int]:
        """Begin a grounding action; None if the name is not registered."""
        if name not in _ACTUATORS:
            return None
        actuator, channel = _ACTUATORS[name]
        action = _Action(
            aid=self._next_aid,
            name=name,
            actuator=actuator,
            channel=channel,
            focus=focus,
            directive=directive,
        )
        self._next_aid += 1
        self._arbitrate(action)
        if action.status is RUNNING:
            getattr(self, f"_setup_{name}")(action, args)
        if action.status is RUNNING:
            self.actions.append(action)
        else:
            self._finished[action.aid] = action.status
        return action.aid

    def status(self, aid: int) -> str:
        for action in self.actions:
            if action.aid == aid:
                return action.status
        return self._finished.get(aid, FAILED)

    def drop_focus(self, focus: int) -> None:
        """Fail any still-running actions of a completed/terminated focus."""
        for action in self.actions:
            if action.focus == focus and action.status is RUNNING:
                action.status = FAILED

    def cancel(self, aid: int) -> None:
        """Silently stop one action (owner was force-terminated)."""
        for action in self.actions:
            if action.aid == aid and action.status is RUNNING:
                action.status = FAILED

    def _arbitrate(self, incoming: _Action) -> None:
        """Youngest focus wins an actuator; same focus shares channels."""
        for other in self.actions:
            if other.status is not RUNNING or other.actuator != incoming.actuator:
                continue
            if other.focus == incoming.focus:
                if other.channel == incoming.channel:
                    other.status = FAILED  # superseded by its own focus
                continue
            if incoming.focus >= other.focus:
                other.status = FAILED  # younger focus takes the actuator
            else:
                incoming.status = FAILED  # an older focus cannot steal it
                return

    # -- per-function setup ------------------------------------------------

    def _setup_base_drive(self, action: _Action, args: ActionArgs) -> None:
        sign = -1.0 if args.dirs & BACKWARD_WORDS else 1.0
        factor = 1.0
        if args.degs & SLOW_WORDS:
            factor = self.config.slow_factor
        elif args.degs & QUICK_WORDS:
            factor = self.config.quick_factor
        speed = sign * self.config.v_nom * factor
        action.speed = max(-self.config.v_max, min(self.config.v_max, speed))
        action.timer = self.config.drive_ticks
        action.trail.append((self.x, self.y))

    def _setup_base_turn(self, action: _Action, args: ActionArgs) -> None:
        if args.dirs & RIGHT_WORDS:
            sign = -1.0
        elif args.dirs & LEFT_WORDS or not args.dirs:
            sign = 1.0  # bare "turn" reorients counterclockwise
        else:
            action.status = FAILED  # direction words present but unknown
            return
        action.spin = sign * self.config.turn_angle / (self.config.turn_ticks / self.config.tick_hz)
        action.timer = self.config.turn_ticks

    def _setup_base_grab(self, action: _Action, args: ActionArgs) -> None:
        target = self._graspable_on_ray()
        if target is None or self.holding is not None:
            action.status = FAILED
            return
        action.pending_obj = target
        action.timer = self.config.grab_ticks

    def _setup_base_release(self, action: _Action, args: ActionArgs) -> None:
        action.timer = self.config.grab_ticks

    def _setup_base_lift(self, action: _Action, args: ActionArgs) -> None:
        action.lift_delta = self.config.lift_step
        action.timer = self.config.lift_ticks

    def _setup_base_lower(self, action: _Action, args: ActionArgs) -> None:
        action.lift_delta = -self.config.lift_step
        action.timer = self.config.lift_ticks

    def _setup_base_say(self, action: _Action, args: ActionArgs) -> None:
        text = args.text or ""
        self.speech.append((action.focus, action.directive, text))
        action.timer = self.config.say_ticks_per_char * len(text)
        if action.timer == 0:
            action.status = DONE

    # -- per-tick advance --------------------------------------------------

    def advance(self, tick: int) -> None:
        """Integrate one tick of motion and actuation."""
        dt = 1.0 / self.config.tick_hz
        v = 0.0
        omega = 0.0
        for action in self.actions:
            if action.status is RUNNING and action.actuator == "wheels":
                if action.channel == "drive":
                    v += action.speed
                else:
                    omega += action.spin
        blocked = self._move(v, omega, dt)

        if self.holding is not None:
            offset = self.config.robot_radius + self.holding.radius + 1e-9
            self.holding.x = self.x + offset * math.cos(self.heading)
            self.holding.y = self.y + offset * math.sin(self.heading)

        for action in self.actions:
            if action.status is not RUNNING:
                continue
            if action.channel == "drive":
                action.trail.append((self.x, self.y))
                action.contact_ticks.append(blocked)
                window = self.config.stall_window_ticks
                if len(action.trail) > window:
                    ax, ay = action.trail[-1 - window]
                    moved = math.hypot(self.x - ax, self.y - ay)
                    if moved < self.config.stall_eps and any(action.contact_ticks[-window:]):
                        action.status = FAILED
                        continue
            action.timer -= 1
            if action.timer <= 0:
                self._finish(action)
        for action in self.actions:
            if action.status is not RUNNING:
                self._finished[action.aid] = action.status
        self.actions = [a for a in self.actions if a.status is RUNNING]
        self._reading = self._raycast()

    def _finish(self, action: _Action) -> None:
        if action.name == "base_grab" and action.pending_obj is not None:
            target = action.pending_obj
            if target.held or not self._within_grasp(target):
                action.status = FAILED  # it drifted away during the reach
                return
            target.held = True
            self.holding = target
        elif action.name == "base_release":
            if self.holding is not None:
                self.holding.held = False
                self.holding = None
        elif action.name in ("base_lift", "base_lower"):
            self.lift = max(0.0, min(self.config.lift_max, self.lift + action.lift_delta))
        action.status = DONE

    # -- geometry -----------------------------------------------------------

    def _move(self, v: float, omega: float, dt: float) -> bool:
        """Exact unicycle step with stop-at-contact. Returns contact flag."""
        theta0 = self.heading
        self.heading = self._wrap(theta0 + omega * dt)
        if v == 0.0:
            return False

        def pose_at(t: float) -> tuple[float, float]:
            th = theta0 + omega * dt * t
            if abs(omega) < 1e-12:
                return (self.x + v * dt * t * math.cos(theta0), self.y + v * dt * t * math.sin(theta0))
            return (
                self.x + (v / omega) * (math.sin(th) - math.sin(theta0)),
                self.y - (v / omega) * (math.cos(th) - math.cos(theta0)),
            )

        fx, fy = pose_at(1.0)
        if not self._collides(fx, fy):
            self.x, self.y = fx, fy
            return False
        # bisect the free fraction of the arc: deterministic stop-at-contact
        lo, hi = 0.0, 1.0
        for _ in range(40):
            mid = (lo + hi) / 2.0
            mx, my = pose_at(mid)
            if self._collides(mx, my):
                hi = mid
            else:
                lo = mid
        self.x, self.y = pose_at(lo)
        return True

    def _collides(self, x: float, y: float) -> bool:
        r = self.config.robot_radius
        w = self.world
        if x - r < w.xmin or x + r > w.xmax or y - r < w.ymin or y + r > w.ymax:
            return True
        for obs in w.obstacles:
            if math.hypot(x - obs.x, y - obs.y) < r + obs.radius:
                return True
        for obj in w.objects:
            if obj.held:
                continue
            if math.hypot(x - obj.x, y - obj.y) < r + obj.radius:
                return True
        return False

    def _ray_origin(self) -> tuple[float, float]:
        r = self.config.robot_radius
        return (self.x + r * math.cos(self.heading), self.y + r * math.sin(self.heading))

    def _ray_hit_circle(self, ox: float, oy: float, cx: float, cy: float, radius: float) -> Optional[float]:
        dx, dy = math.cos(self.heading), math.sin(self.heading)
        fx, fy = cx - ox, cy - oy
        proj = fx * dx + fy * dy
        closest2 = fx * fx + fy * fy - proj * proj
        if closest2 > radius * radius:
            return None
        back = math.sqrt(radius * radius - closest2)
        t = proj - back
        if t < 0.0:
            if proj + back < 0.0:
                return None
            return 0.0  # origin inside the circle
        return t

    def _raycast(self) -> Optional[float]:
        """Forward range from the robot's rim, None beyond the sensor max."""
        ox, oy = self._ray_origin()
        dx, dy = math.cos(self.heading), math.sin(self.heading)
        w = self.world
        best: Optional[float] = None

        def consider(t: Optional[float]) -> None:
            nonlocal best
            if t is not None and t >= 0.0 and (best is None or t < best):
                best = t

        if dx > 1e-12:
            t = (w.xmax - ox) / dx
            if w.ymin <= oy + t * dy <= w.ymax:
                consider(t)
        if dx < -1e-12:
            t = (w.xmin - ox) / dx
            if w.ymin <= oy + t * dy <= w.ymax:
                consider(t)
        if dy > 1e-12:
            t = (w.ymax - oy) / dy
            if w.xmin <= ox + t * dx <= w.xmax:
                consider(t)
        if dy < -1e-12:
            t = (w.ymin - oy) / dy
            if w.xmin <= ox + t * dx <= w.xmax:
                consider(t)
        for obs in w.obstacles:
            consider(self._ray_hit_circle(ox, oy, obs.x, obs.y, obs.radius))
        for obj in w.objects:
            if not obj.held:
                consider(self._ray_hit_circle(ox, oy, obj.x, obj.y, obj.radius))
        if best is None or best > self.config.sense_max:
            return None
        return best

    def _within_grasp(self, obj: WorldObject) -> bool:
        ox, oy = self._ray_origin()
        t = self._ray_hit_circle(ox, oy, obj.x, obj.y, obj.radius)
        return t is not None and t <= self.config.grasp_range

    def _graspable_on_ray(self) -> Optional[WorldObject]:
        ox, oy = self._ray_origin()
        best: Optional[WorldObject] = None
        best_t = math.inf
        for obj in self.world.objects:
            if obj.held or not obj.graspable:
                continue
            t = self._ray_hit_circle(ox, oy, obj.x, obj.y, obj.radius)
            if t is not None and t <= self.config.grasp_range and t < best_t:
                best, best_t = obj, t
        return best

    # -- sensing and reporting ----------------------------------------------

    def reading(self) -> Optional[float]:
        if self._reading is None:
            self._reading = self._raycast()
        return self._reading

    def proximity_alert(self, tick: int) -> bool:
        """True when the reading crosses the trigger, outside refractory."""
        r = self.reading()
        if r is None or r >= self.config.sense_trigger:
            return False
        last = self._last_proximity_tick
        if last is not None and tick - last < self.config.refractory_ticks:
            return False
        self._last_proximity_tick = tick
        return True

    def take_speech(self) -> list[tuple[int, int, str]]:
        out, self.speech = self.speech, []
        return out

    def place_object(self, name: str, x: float, y: float, radius: float, graspable: bool = True) -> None:
        for obj in self.world.objects:
            if obj.name == name.lower():
                obj.x, obj.y, obj.radius, obj.graspable = x, y, radius, graspable
                self._reading = None
                return
        self.world.objects.append(WorldObject(name.lower(), x, y, radius, graspable))
        self._reading = None

    def place_obstacle(self, x: float, y: float, radius: float) -> None:
        self.world.obstacles.append(Obstacle(x, y, radius))
        self._reading = None

    def grip_state(self) -> str:
        return "closed" if self.holding is not None else "open"

    def snapshot(self, tick: int) -> dict:
        v = sum(a.speed for a in self.actions if a.status is RUNNING and a.channel == "drive")
        omega = sum(a.spin for a in self.actions if a.status is RUNNING and a.channel == "turn")
        reading = self.reading()
        return {
            "tick": tick,
            "x": round(self.x, 9),
            "y": round(self.y, 9),
            "heading": round(self.heading, 9),
            "speed": round(v, 9),
            "spin": round(omega, 9),
            "grip": self.grip_state(),
            "holding": self.holding.name if self.holding else None,
            "lift": round(self.lift, 9),
            "range": None if reading is None else round(reading, 9),
        }

    @staticmethod
    def _wrap(theta: float) -> float:
        while theta > math.pi:
            theta -= 2.0 * math.pi
        while theta < -math.pi:
            theta += 2.0 * math.pi
        return theta
