use std::fmt;

use serde::{Deserialize, Serialize};

use crate::topo::DoorState;

use super::action::{ActionKind, EmuAction};
use super::world::{door_key, Location, WorldState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FailureCode {
    PreconditionViolated,
    GoalUnmet,
    UnknownObject,
    UnknownHand,
    Disconnected,
    DoorClosed,
    HandOccupied,
    NotHolding,
    ContainerClosed,
    UnderOthers,
    WrongNode,
    NotOpenable,
    NotSwitchable,
    EmptySource,
}

impl fmt::Display for FailureCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub code: FailureCode,
    pub detail: String,
}

fn fail<T>(code: FailureCode, detail: impl Into<String>) -> Result<T, Violation> {
    Err(Violation { code, detail: detail.into() })
}

pub const OPENABLE: &[&str] = &[
    "fridge", "laptop", "remote", "curtain", "window", "microwave", "kettle", "washing_machine", "drawer", "cabinet",
    "bottle", "box", "pot", "oven",
];
pub const SWITCHABLE: &[&str] =
    &["tap", "faucet", "lamp", "laptop", "microwave", "kettle", "coffee_maker", "washing_machine", "tv", "toaster", "oven"];
pub const CONTAINERS: &[&str] = &[
    "fridge", "bin", "remote", "drawer", "cabinet", "microwave", "washing_machine", "bowl", "cup", "pot", "box",
    "holder", "basket", "kettle", "toaster", "oven", "sink",
];
pub const SURFACES: &[&str] = &["table", "coffee_maker", "plate", "shelf", "counter", "tray", "floor", "couch", "desk", "rack", "base"];
pub const WIPERS: &[&str] = &["cloth", "sponge", "rag", "towel", "eraser", "tissue"];
pub const KNIVES: &[&str] = &["knife"];
pub const STIRRERS: &[&str] = &["spoon", "ladle", "stirrer", "chopsticks"];
pub const SCOOPERS: &[&str] = &["paddle", "spoon", "ladle", "scoop"];
pub const HANGERS: &[&str] = &["rack", "hook", "hanger"];

/// Flags moved by pouring and copied by scooping.
fn is_content_flag(f: &str) -> bool {
    f.starts_with("filled_")
}

impl WorldState {
    fn resolve_hand(&self, a: &EmuAction) -> Result<String, Violation> {
        match &a.hand {
            Some(h) if self.hands.contains_key(h) => Ok(h.clone()),
            // Single-arm plans often write a generic hand name.
            Some(_) | None if self.hands.len() == 1 => Ok(self.hands.keys().next().unwrap().clone()),
            Some(h) => fail(FailureCode::UnknownHand, format!("no hand named {h}")),
            None => fail(FailureCode::UnknownHand, "action needs a hand"),
        }
    }

    fn free_hand(&self, a: &EmuAction) -> Result<String, Violation> {
        let h = self.resolve_hand(a)?;
        match &self.hands[&h] {
            None => Ok(h),
            Some(o) => fail(FailureCode::HandOccupied, format!("{h} holds {o}")),
        }
    }

    fn holding(&self, a: &EmuAction) -> Result<(String, String), Violation> {
        let h = self.resolve_hand(a)?;
        match &self.hands[&h] {
            Some(o) => Ok((h, o.clone())),
            None => fail(FailureCode::NotHolding, format!("{h} is empty")),
        }
    }

    fn local(&self, id: &str) -> Result<(), Violation> {
        match self.node_of(id) {
            None => fail(FailureCode::UnknownObject, format!("no object {id}")),
            Some(n) if n == self.robot_at => Ok(()),
            Some(n) => fail(FailureCode::WrongNode, format!("{id} is at {n}, robot at {}", self.robot_at)),
        }
    }

    fn is_open(&self, id: &str) -> bool {
        self.objects[id].flag("is_open")
    }

    fn closed_container(&self, id: &str) -> bool {
        let o = &self.objects[id];
        o.is_a(OPENABLE) && !o.flag("is_open")
    }

    /// True if `inner` is `outer` or rests in or on it.
    fn within(&self, inner: &str, outer: &str) -> bool {
        let mut cur = inner;
        for _ in 0..=self.objects.len() {
            if cur == outer {
                return true;
            }
            match &self.objects[cur].location {
                Location::In(t) | Location::On(t) | Location::Hung(t) => cur = t,
                _ => return false,
            }
        }
        false
    }

    fn release(&mut self, hand: &str, obj: &str, loc: Location) {
        self.hands.insert(hand.to_string(), None);
        self.objects.get_mut(obj).unwrap().location = loc;
    }

    /// Finds the door an `open_door` refers to: explicit endpoints, the
    /// `door_{a}_{b}` name, or a door at the robot's node whose endpoint
    /// names contain every word of the given name.
    fn resolve_door(&self, a: &EmuAction) -> Result<(String, String), Violation> {
        let is_door = |x: &str, y: &str| self.doors.contains_key(&door_key(x, y));
        if let Some((x, y)) = &a.door {
            return if is_door(x, y) { Ok((x.clone(), y.clone())) } else { fail(FailureCode::UnknownObject, format!("no door {x} -- {y}")) };
        }
        let name = a.target.strip_prefix("door_").unwrap_or(&a.target);
        for (i, _) in name.match_indices('_') {
            let (x, y) = (&name[..i], &name[i + 1..]);
            if is_door(x, y) {
                return Ok((x.to_string(), y.to_string()));
            }
        }
        let words: Vec<&str> = name.split('_').collect();
        let here = &self.robot_at;
        let mut found: Vec<(String, String)> = self
            .doors
            .keys()
            .filter(|(x, y)| x == here || y == here)
            .filter(|(x, y)| {
                let ends: Vec<&str> = x.split('_').chain(y.split('_')).collect();
                words.iter().all(|w| ends.contains(w))
            })
            .cloned()
            .collect();
        if found.len() == 1 {
            return Ok(found.pop().unwrap());
        }
        fail(FailureCode::UnknownObject, format!("cannot identify door {}", a.target))
    }

    /// One hop to an adjacent node.
    pub(crate) fn hop(&mut self, to: &str) -> Result<f64, Violation> {
        let Some(e) = self.map.edge_between(&self.robot_at, to) else {
            return fail(FailureCode::Disconnected, format!("{} and {to} are not adjacent", self.robot_at));
        };
        let cost = e.cost;
        if e.door != DoorState::None && self.door(&e.a, &e.b) == Some(DoorState::Closed) {
            return fail(FailureCode::DoorClosed, format!("door {} -- {to} is closed", self.robot_at));
        }
        self.robot_at = to.to_string();
        for o in self.objects.values_mut() {
            if let Location::Under { hand, .. } = &o.location {
                o.location = Location::Held(hand.clone());
            }
        }
        Ok(cost)
    }

    /// Applies one action to a copy of the state. Moves here are single
    /// hops; `run` can expand longer moves into hops.
    pub fn step(&self, a: &EmuAction) -> Result<WorldState, Violation> {
        let mut w = self.clone();
        w.apply(a)?;
        Ok(w)
    }

    pub(crate) fn apply(&mut self, a: &EmuAction) -> Result<(), Violation> {
        use ActionKind::*;
        if a.robot != self.robot {
            return fail(FailureCode::UnknownObject, format!("no robot {}", a.robot));
        }
        let t = a.target.as_str();
        if a.kind == Move {
            if self.map.index_of(t).is_none() {
                return fail(FailureCode::UnknownObject, format!("no node {t}"));
            }
            return self.hop(t).map(|_| ());
        }
        if a.kind == OpenDoor {
            let (x, y) = self.resolve_door(a)?;
            self.free_hand(a)?;
            if self.robot_at != x && self.robot_at != y {
                return fail(FailureCode::WrongNode, format!("robot at {} is not beside door {x} -- {y}", self.robot_at));
            }
            self.doors.insert(door_key(&x, &y), DoorState::Open);
            return Ok(());
        }
        if !self.objects.contains_key(t) {
            return fail(FailureCode::UnknownObject, format!("no object {t}"));
        }
        let kind_err = |what: &str| fail(FailureCode::PreconditionViolated, format!("{t} {what}"));
        match a.kind {
            Pick => {
                let h = self.free_hand(a)?;
                self.local(t)?;
                let o = &self.objects[t];
                if o.fixed {
                    return kind_err("cannot be picked up");
                }
                match &o.location {
                    Location::Held(_) | Location::Under { .. } => return kind_err("is already held"),
                    Location::In(c) if self.closed_container(c) => {
                        return fail(FailureCode::ContainerClosed, format!("{c} is closed"))
                    }
                    _ => {}
                }
                if o.flag("under_others") {
                    return fail(FailureCode::UnderOthers, format!("{t} is under other objects"));
                }
                if let Location::In(c) = o.location.clone() {
                    if self.objects[&c].is_a(&["remote"]) {
                        self.objects.get_mut(&c).unwrap().set("has_battery", false);
                    }
                }
                self.objects.get_mut(t).unwrap().location = Location::Held(h.clone());
                self.hands.insert(h, Some(t.to_string()));
            }
            PlaceIn => {
                let (h, o) = self.holding(a)?;
                self.local(t)?;
                let c = &self.objects[t];
                if !c.is_a(CONTAINERS) {
                    return kind_err("is not a container");
                }
                if self.closed_container(t) {
                    return fail(FailureCode::ContainerClosed, format!("{t} is closed"));
                }
                if self.within(t, &o) {
                    return kind_err(&format!("is part of {o}"));
                }
                if c.is_a(&["remote"]) {
                    if !self.objects[&o].is_a(&["battery"]) || c.flag("has_battery") {
                        return kind_err("cannot take that");
                    }
                    self.objects.get_mut(t).unwrap().set("has_battery", true);
                }
                self.release(&h, &o, Location::In(t.to_string()));
            }
            PlaceOn => {
                let (h, o) = self.holding(a)?;
                self.local(t)?;
                let s = &self.objects[t];
                if !s.is_a(SURFACES) {
                    return kind_err("is not a surface");
                }
                if s.flag("under_others") {
                    return fail(FailureCode::UnderOthers, format!("{t} is under other objects"));
                }
                if self.within(t, &o) {
                    return kind_err(&format!("is part of {o}"));
                }
                self.release(&h, &o, Location::On(t.to_string()));
            }
            PlaceUnder => {
                let (h, o) = self.holding(a)?;
                self.local(t)?;
                self.objects.get_mut(&o).unwrap().location = Location::Under { target: t.to_string(), hand: h };
                if self.objects[t].flag("is_on") {
                    self.run_water(t);
                }
            }
            Open | Close => {
                self.free_hand(a)?;
                self.local(t)?;
                let o = &self.objects[t];
                if !o.is_a(OPENABLE) {
                    return fail(FailureCode::NotOpenable, format!("{t} cannot be opened or closed"));
                }
                let opening = a.kind == Open;
                if o.flag("is_open") == opening {
                    return kind_err(if opening { "is already open" } else { "is already closed" });
                }
                if opening && o.flag("covered") {
                    return kind_err("is covered");
                }
                if o.is_a(&["window"]) {
                    let blocked = self.links.iter().filter(|(w, _)| w == t).any(|(_, c)| !self.is_open(c));
                    if blocked {
                        return kind_err("is behind a closed curtain");
                    }
                }
                self.objects.get_mut(t).unwrap().set("is_open", opening);
            }
            Pour => {
                let (_, o) = self.holding(a)?;
                self.local(t)?;
                let src = &self.objects[&o];
                let contents: Vec<String> = src.flags.iter().filter(|f| is_content_flag(f)).cloned().collect();
                if src.flag("empty") || contents.is_empty() {
                    return fail(FailureCode::EmptySource, format!("{o} is empty"));
                }
                if self.closed_container(&o) {
                    return fail(FailureCode::ContainerClosed, format!("{o} is closed"));
                }
                if self.closed_container(t) {
                    return fail(FailureCode::ContainerClosed, format!("{t} is closed"));
                }
                let src = self.objects.get_mut(&o).unwrap();
                for f in &contents {
                    src.set(f, false);
                }
                src.set("empty", true);
                let dst = self.objects.get_mut(t).unwrap();
                for f in &contents {
                    dst.set(f, true);
                }
                dst.set("empty", false);
            }
            Cut | Stir => {
                let (_, tool) = self.holding(a)?;
                self.local(t)?;
                let (tools, flag) = if a.kind == Cut { (KNIVES, "cut") } else { (STIRRERS, "stirred") };
                if !self.objects[&tool].is_a(tools) {
                    return fail(FailureCode::PreconditionViolated, format!("{tool} is not a {} tool", a.kind));
                }
                self.objects.get_mut(t).unwrap().set(flag, true);
            }
            Scoop => {
                let (_, tool) = self.holding(a)?;
                self.local(t)?;
                if !self.objects[&tool].is_a(SCOOPERS) {
                    return fail(FailureCode::PreconditionViolated, format!("{tool} cannot scoop"));
                }
                if self.closed_container(t) {
                    return fail(FailureCode::ContainerClosed, format!("{t} is closed"));
                }
                let contents: Vec<String> = self.objects[t].flags.iter().filter(|f| is_content_flag(f)).cloned().collect();
                if self.objects[t].flag("empty") || contents.is_empty() {
                    return fail(FailureCode::EmptySource, format!("{t} is empty"));
                }
                let tool = self.objects.get_mut(&tool).unwrap();
                for f in &contents {
                    tool.set(f, true);
                }
                tool.set("empty", false);
            }
            Fold => {
                self.free_hand(a)?;
                self.local(t)?;
                if !self.objects[t].flag("unfolded") {
                    return kind_err("is not unfolded");
                }
                let o = self.objects.get_mut(t).unwrap();
                o.set("unfolded", false);
                o.set("folded", true);
            }
            Wipe => {
                let (_, tool) = self.holding(a)?;
                self.local(t)?;
                let x = &self.objects[&tool];
                if !(x.is_a(WIPERS) || x.flag("can_wipe_table") || x.flag("can_wipe_blackboard")) {
                    return fail(FailureCode::PreconditionViolated, format!("{tool} cannot wipe"));
                }
                self.objects.get_mut(t).unwrap().set("wiped", true);
            }
            TurnOn | TurnOff => {
                self.free_hand(a)?;
                self.local(t)?;
                let d = &self.objects[t];
                if !d.is_a(SWITCHABLE) {
                    return fail(FailureCode::NotSwitchable, format!("{t} has no switch"));
                }
                if a.kind == TurnOff {
                    self.objects.get_mut(t).unwrap().set("is_on", false);
                    return Ok(());
                }
                if d.is_a(&["laptop"]) && !d.flag("is_open") {
                    return kind_err("is closed");
                }
                if d.is_a(&["washing_machine"]) && d.flag("is_open") {
                    return kind_err("door is open");
                }
                self.objects.get_mut(t).unwrap().set("is_on", true);
                self.switch_on_effects(t);
            }
            HangOn => {
                let (h, o) = self.holding(a)?;
                self.local(t)?;
                if !self.objects[t].is_a(HANGERS) {
                    return kind_err("has nothing to hang on");
                }
                self.release(&h, &o, Location::Hung(t.to_string()));
                self.objects.get_mut(&o).unwrap().set("hung", true);
            }
            Move | OpenDoor => unreachable!(),
        }
        Ok(())
    }

    fn contents_of(&self, id: &str, on: bool) -> Vec<String> {
        self.objects
            .values()
            .filter(|o| match &o.location {
                Location::In(c) => !on && c == id,
                Location::On(c) => on && c == id,
                _ => false,
            })
            .map(|o| o.id.clone())
            .collect()
    }

    fn run_water(&mut self, tap: &str) {
        let under: Vec<String> = self
            .objects
            .values()
            .filter(|o| matches!(&o.location, Location::Under { target, .. } if target == tap))
            .map(|o| o.id.clone())
            .collect();
        for id in under {
            let o = self.objects.get_mut(&id).unwrap();
            o.set("washed", true);
            let fills = o.is_a(&["cup"]) || (o.is_a(&["kettle"]) && o.flag("is_open"));
            if fills {
                o.set("filled_water", true);
                o.set("empty", false);
            }
        }
    }

    fn switch_on_effects(&mut self, t: &str) {
        let d = self.objects[t].clone();
        let closed = !d.flag("is_open");
        if d.is_a(&["tap", "faucet"]) {
            self.run_water(t);
        }
        if d.is_a(&["coffee_maker"]) {
            for c in self.contents_of(t, true) {
                let o = self.objects.get_mut(&c).unwrap();
                if o.is_a(&["cup"]) {
                    o.set("filled_coffee", true);
                    o.set("empty", false);
                }
            }
            // One brew per press; the machine does not stay on.
            self.objects.get_mut(t).unwrap().set("is_on", false);
        }
        if closed && d.is_a(&["microwave", "oven"]) {
            for c in self.contents_of(t, false) {
                self.objects.get_mut(&c).unwrap().set("heated", true);
            }
        }
        if d.is_a(&["toaster"]) {
            for c in self.contents_of(t, false) {
                self.objects.get_mut(&c).unwrap().set("toasted", true);
            }
        }
        if closed && d.is_a(&["kettle"]) && d.flag("filled_water") {
            self.objects.get_mut(t).unwrap().set("heated", true);
        }
        if closed && d.is_a(&["washing_machine"]) {
            for c in self.contents_of(t, false) {
                self.objects.get_mut(&c).unwrap().set("washed", true);
            }
        }
    }
}
