//! Registered page generators: scaled-down clones of six MiniWoB tasks.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dom::{Attr, DomElement, DomTree, ElementId, Field, Goal, Instruction};

use super::semantics::apply_action;
use super::{CompositeAction, EnvError, Task};

/// Vocabulary sizes for the generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteScale {
    pub airports: usize,
    pub dates: usize,
    pub users: usize,
    pub passwords: usize,
    pub posts: usize,
    pub pie_wedges: usize,
}

impl Default for SuiteScale {
    fn default() -> Self {
        SuiteScale {
            airports: 20,
            dates: 30,
            users: 50,
            passwords: 30,
            posts: 5,
            pie_wedges: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvKind {
    ClickDialog,
    LoginUser,
    EnterPassword,
    ClickPie,
    SocialMediaMini,
    BookFlightForm,
}

const AIRPORTS: [&str; 40] = [
    "SFO", "LAX", "JFK", "ORD", "ATL", "DFW", "DEN", "SEA", "BOS", "MIA", "LHR", "CDG", "FRA",
    "AMS", "MAD", "FCO", "NRT", "HND", "PEK", "SYD", "YYZ", "MEX", "GRU", "DXB", "SIN", "HKG",
    "ICN", "BKK", "IST", "ZRH", "VIE", "CPH", "OSL", "ARN", "HEL", "DUB", "LIS", "ATH", "PRG",
    "WAW",
];

const NAMES: [&str; 50] = [
    "alice", "bruno", "carla", "dmitri", "elena", "farah", "gavin", "hana", "ivan", "julia",
    "kofi", "lena", "marco", "nadia", "oscar", "priya", "quinn", "rosa", "samir", "tara",
    "umar", "vera", "wen", "ximena", "yusuf", "zara", "abel", "bianca", "cyrus", "daria",
    "emil", "fiona", "goran", "helga", "ines", "jonas", "kira", "luca", "mira", "nils", "olga",
    "pablo", "rhea", "stefan", "tomas", "una", "viktor", "wanda", "yara", "zeno",
];

const SYLLABLES: [&str; 10] = ["ka", "lo", "mi", "nu", "pe", "ra", "si", "to", "vu", "ze"];

const DIALOG_BUTTONS: [&str; 3] = ["ok", "cancel", "close"];
const DIALOG_TITLES: [&str; 4] = ["Notice", "Warning", "Update", "Alert"];
const DIALOG_BODIES: [&str; 4] = [
    "Your session will expire soon",
    "Changes have been saved",
    "A new version is available",
    "Please review the terms",
];
const ALNUM: &str = "abcdefghijklmnopqrstuvwxyz0123456789";
const SOCIAL_ACTIONS: [&str; 2] = ["like", "share"];

fn pick_names(list: &[&str], n: usize, prefix: &str) -> Vec<String> {
    (0..n)
        .map(|i| match list.get(i) {
            Some(s) => s.to_string(),
            None => format!("{prefix}{i}"),
        })
        .collect()
}

fn airports(n: usize) -> Vec<String> {
    pick_names(&AIRPORTS, n, "AP")
}

fn dates(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| format!("{:02}/{:02}/{}", 1 + i % 12, 1 + (i * 7) % 28, 2016 + i / 12))
        .collect()
}

fn users(n: usize) -> Vec<String> {
    pick_names(&NAMES, n, "user")
}

fn passwords(n: usize) -> Vec<String> {
    (0..n)
        .map(|i| {
            let a = SYLLABLES[i % 10];
            let b = SYLLABLES[(i / 10 + 3 * i) % 10];
            let c = SYLLABLES[(7 * i + 1) % 10];
            format!("{a}{b}{c}{}", i % 10)
        })
        .collect()
}

fn alnum() -> Vec<String> {
    ALNUM.chars().map(|c| c.to_string()).collect()
}

/// Incremental page construction with pre-order ids.
struct Page {
    els: Vec<DomElement>,
}

impl Page {
    fn new(tag: &str) -> Self {
        Page {
            els: vec![DomElement::leaf(0, tag)],
        }
    }

    fn add(&mut self, parent: ElementId, el: DomElement) -> ElementId {
        let id = self.els.len() as ElementId;
        let el = DomElement {
            element_id: id,
            ..el
        };
        self.els.push(el);
        let p = &mut self.els[parent as usize];
        p.children.push(id);
        p.is_leaf = false;
        id
    }

    fn set(&mut self, id: ElementId, attr: Attr, value: &str) {
        self.els[id as usize].attrs.set(attr, value);
    }

    fn build(self) -> DomTree {
        DomTree::new(0, self.els).expect("generated page is valid")
    }
}

fn el(tag: &str) -> DomElement {
    DomElement::leaf(0, tag)
}

fn text(tag: &str, s: &str) -> DomElement {
    el(tag).with_attr(Attr::Text, s)
}

fn instruction(pairs: &[(&str, &str)]) -> Instruction {
    Instruction::new(
        pairs
            .iter()
            .map(|(k, v)| Field::new(*k, *v).expect("non-empty"))
            .collect(),
    )
    .expect("generated instruction is valid")
}

/// Builds the goal by applying `actions` to the initial page.
fn finish(
    instruction: Instruction,
    initial: DomTree,
    actions: &[CompositeAction],
    relevant: Vec<ElementId>,
    terminal: Vec<ElementId>,
    task_len: usize,
) -> Task {
    let mut goal = initial.clone();
    for &a in actions {
        goal = apply_action(&goal, &instruction, a).tree;
    }
    let max_steps = (instruction.len() + 3).max(task_len);
    Task {
        instruction,
        initial,
        goal: Goal::new(goal, relevant).expect("relevant ids exist"),
        terminal,
        max_steps,
    }
}

impl EnvKind {
    pub const ALL: [EnvKind; 6] = [
        EnvKind::ClickDialog,
        EnvKind::LoginUser,
        EnvKind::EnterPassword,
        EnvKind::ClickPie,
        EnvKind::SocialMediaMini,
        EnvKind::BookFlightForm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EnvKind::ClickDialog => "click-dialog",
            EnvKind::LoginUser => "login-user",
            EnvKind::EnterPassword => "enter-password",
            EnvKind::ClickPie => "click-pie",
            EnvKind::SocialMediaMini => "social-media-mini",
            EnvKind::BookFlightForm => "book-flight-form",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|k| k.name()).collect()
    }

    pub fn parse(name: &str) -> Result<EnvKind, EnvError> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == name)
            .ok_or_else(|| EnvError::UnknownEnv(name.to_string()))
    }

    pub fn describe(self) -> &'static str {
        match self {
            EnvKind::ClickDialog => "click the dialog button named in the instruction",
            EnvKind::LoginUser => "type username and password, then press login",
            EnvKind::EnterPassword => "type the password into both boxes, then submit",
            EnvKind::ClickPie => "click the pie wedge with the given label",
            EnvKind::SocialMediaMini => "like or share every post by a user, then submit",
            EnvKind::BookFlightForm => "fill origin, destination and date, then search",
        }
    }

    pub fn keys(self) -> Vec<String> {
        let k: &[&str] = match self {
            EnvKind::ClickDialog => &["button"],
            EnvKind::LoginUser => &["username", "password"],
            EnvKind::EnterPassword => &["password"],
            EnvKind::ClickPie => &["label"],
            EnvKind::SocialMediaMini => &["user", "action"],
            EnvKind::BookFlightForm => &["from", "to", "date"],
        };
        k.iter().map(|s| s.to_string()).collect()
    }

    pub fn value_vocabulary(self, scale: &SuiteScale) -> Vec<String> {
        match self {
            EnvKind::ClickDialog => DIALOG_BUTTONS.iter().map(|s| s.to_string()).collect(),
            EnvKind::LoginUser => {
                let mut v = users(scale.users);
                v.extend(passwords(scale.passwords));
                v
            }
            EnvKind::EnterPassword => passwords(scale.passwords),
            EnvKind::ClickPie => alnum(),
            EnvKind::SocialMediaMini => {
                let mut v = users(scale.users);
                v.extend(SOCIAL_ACTIONS.iter().map(|s| s.to_string()));
                v
            }
            EnvKind::BookFlightForm => {
                let mut v = airports(scale.airports);
                v.extend(dates(scale.dates));
                v
            }
        }
    }

    /// All strings that can appear in pages or instructions.
    pub fn vocabulary(self, scale: &SuiteScale) -> Vec<String> {
        let fixed: &[&str] = match self {
            EnvKind::ClickDialog => &[
                "div", "h3", "p", "button", "dialog", "dialog-title", "dialog-body", "btn",
                "active",
            ],
            EnvKind::LoginUser => &[
                "div", "label", "input", "button", "Username", "Password", "Login", "username",
                "password", "subbtn", "submit", "active",
            ],
            EnvKind::EnterPassword => &[
                "div", "label", "input", "button", "Password", "Verify password", "password",
                "verify", "Submit", "subbtn", "submit", "active",
            ],
            EnvKind::ClickPie => &["div", "span", "a", "pie", "wedge", "Select an item", "active"],
            EnvKind::SocialMediaMini => &[
                "div", "span", "button", "feed", "post", "username", "like toggle",
                "share toggle", "Like", "Share", "Submit", "submit", "active", "@",
            ],
            EnvKind::BookFlightForm => &[
                "form", "h2", "div", "label", "input", "button", "Book Your One-Way Flight",
                "From:", "To:", "Departure Date", "Search", "from", "to", "date", "flight-from",
                "flight-to", "datepicker", "flight-input", "date-input", "field", "search",
                "submit", "active",
            ],
        };
        let mut v: Vec<String> = fixed.iter().map(|s| s.to_string()).collect();
        v.extend(self.keys());
        v.extend(self.value_vocabulary(scale));
        if self == EnvKind::ClickDialog {
            v.extend(DIALOG_TITLES.iter().map(|s| s.to_string()));
            v.extend(DIALOG_BODIES.iter().map(|s| s.to_string()));
        }
        v
    }

    pub fn generate(self, rng: &mut ChaCha8Rng, scale: &SuiteScale) -> Task {
        match self {
            EnvKind::ClickDialog => click_dialog(rng),
            EnvKind::LoginUser => login_user(rng, scale),
            EnvKind::EnterPassword => enter_password(rng, scale),
            EnvKind::ClickPie => click_pie(rng, scale),
            EnvKind::SocialMediaMini => social_media(rng, scale),
            EnvKind::BookFlightForm => book_flight(rng, scale),
        }
    }
}

fn click_dialog(rng: &mut ChaCha8Rng) -> Task {
    let mut p = Page::new("div");
    p.set(0, Attr::Class, "dialog");
    p.add(0, text("h3", DIALOG_TITLES.choose(rng).unwrap()).with_attr(Attr::Class, "dialog-title"));
    p.add(0, text("p", DIALOG_BODIES.choose(rng).unwrap()).with_attr(Attr::Class, "dialog-body"));
    let mut labels = DIALOG_BUTTONS;
    labels.shuffle(rng);
    let buttons: Vec<ElementId> = labels
        .iter()
        .map(|l| p.add(0, text("button", l).with_attr(Attr::Id, *l).with_attr(Attr::Class, "btn")))
        .collect();
    let target = rng.gen_range(0..buttons.len());
    let instr = instruction(&[("button", labels[target])]);
    let tree = p.build();
    finish(
        instr,
        tree,
        &[CompositeAction::click(buttons[target])],
        buttons.clone(),
        buttons,
        1,
    )
}

fn login_user(rng: &mut ChaCha8Rng, scale: &SuiteScale) -> Task {
    let user = users(scale.users).choose(rng).unwrap().clone();
    let pass = passwords(scale.passwords).choose(rng).unwrap().clone();
    let mut p = Page::new("div");
    p.add(0, text("label", "Username"));
    let u = p.add(0, el("input").with_attr(Attr::Name, "username").with_attr(Attr::Id, "username"));
    p.add(0, text("label", "Password"));
    let w = p.add(
        0,
        el("input")
            .with_attr(Attr::Name, "password")
            .with_attr(Attr::Id, "password")
            .with_attr(Attr::Class, "password"),
    );
    let b = p.add(
        0,
        text("button", "Login")
            .with_attr(Attr::Id, "subbtn")
            .with_attr(Attr::Class, "submit"),
    );
    let instr = instruction(&[("username", &user), ("password", &pass)]);
    finish(
        instr,
        p.build(),
        &[CompositeAction::type_field(u, 0), CompositeAction::type_field(w, 1)],
        vec![u, w],
        vec![b],
        3,
    )
}

fn enter_password(rng: &mut ChaCha8Rng, scale: &SuiteScale) -> Task {
    let pass = passwords(scale.passwords).choose(rng).unwrap().clone();
    let mut p = Page::new("div");
    p.add(0, text("label", "Password"));
    let a = p.add(0, el("input").with_attr(Attr::Name, "password").with_attr(Attr::Id, "password"));
    p.add(0, text("label", "Verify password"));
    let b = p.add(0, el("input").with_attr(Attr::Name, "verify").with_attr(Attr::Id, "verify"));
    let s = p.add(
        0,
        text("button", "Submit")
            .with_attr(Attr::Id, "subbtn")
            .with_attr(Attr::Class, "submit"),
    );
    let instr = instruction(&[("password", &pass)]);
    finish(
        instr,
        p.build(),
        &[CompositeAction::type_field(a, 0), CompositeAction::type_field(b, 0)],
        vec![a, b],
        vec![s],
        3,
    )
}

fn click_pie(rng: &mut ChaCha8Rng, scale: &SuiteScale) -> Task {
    let pool = alnum();
    let n = scale.pie_wedges.clamp(1, pool.len());
    let labels: Vec<String> = pool.choose_multiple(rng, n).cloned().collect();
    let mut p = Page::new("div");
    p.add(0, text("span", "Select an item"));
    let pie = p.add(0, el("div").with_attr(Attr::Class, "pie"));
    let wedges: Vec<ElementId> = labels
        .iter()
        .map(|l| p.add(pie, text("a", l).with_attr(Attr::Class, "wedge").in_group(1)))
        .collect();
    let target = rng.gen_range(0..n);
    let instr = instruction(&[("label", &labels[target])]);
    finish(
        instr,
        p.build(),
        &[CompositeAction::click(wedges[target])],
        wedges.clone(),
        wedges,
        1,
    )
}

/// Correctness of a like/share button depends on the author text of its
/// sibling `span`, not on the button itself.
fn social_media(rng: &mut ChaCha8Rng, scale: &SuiteScale) -> Task {
    let names = users(scale.users.max(2));
    let target = names.choose(rng).unwrap().clone();
    let action = *SOCIAL_ACTIONS.choose(rng).unwrap();
    let posts = scale.posts.max(1);
    let k = rng.gen_range(1..=posts);
    let mut authored: Vec<bool> = (0..posts).map(|i| i < k).collect();
    authored.shuffle(rng);

    let mut p = Page::new("div");
    let feed = p.add(0, el("div").with_attr(Attr::Class, "feed"));
    let mut relevant = Vec::new();
    let mut clicks = Vec::new();
    for &mine in &authored {
        let author = if mine {
            target.clone()
        } else {
            loop {
                let n = names.choose(rng).unwrap();
                if *n != target {
                    break n.clone();
                }
            }
        };
        let post = p.add(feed, el("div").with_attr(Attr::Class, "post"));
        p.add(post, text("span", &format!("@{author}")).with_attr(Attr::Class, "username"));
        let like = p.add(post, text("button", "Like").with_attr(Attr::Class, "like toggle"));
        let share = p.add(post, text("button", "Share").with_attr(Attr::Class, "share toggle"));
        relevant.extend([like, share]);
        if mine {
            clicks.push(CompositeAction::click(if action == "like" { like } else { share }));
        }
    }
    let submit = p.add(
        0,
        text("button", "Submit")
            .with_attr(Attr::Id, "submit")
            .with_attr(Attr::Class, "submit"),
    );
    let instr = instruction(&[("user", &target), ("action", action)]);
    finish(instr, p.build(), &clicks, relevant, vec![submit], posts + 1)
}

fn book_flight(rng: &mut ChaCha8Rng, scale: &SuiteScale) -> Task {
    let ports = airports(scale.airports.max(2));
    let days = dates(scale.dates.max(1));
    let pair: Vec<&String> = ports.choose_multiple(rng, 2).collect();
    let (from, to) = (pair[0].clone(), pair[1].clone());
    let date = days.choose(rng).unwrap().clone();

    let mut p = Page::new("form");
    p.add(0, text("h2", "Book Your One-Way Flight"));
    let mut inputs = Vec::new();
    for (label, name, id, class) in [
        ("From:", "from", "flight-from", "flight-input"),
        ("To:", "to", "flight-to", "flight-input"),
        ("Departure Date", "date", "datepicker", "date-input"),
    ] {
        let row = p.add(0, el("div").with_attr(Attr::Class, "field"));
        p.add(row, text("label", label));
        inputs.push(p.add(
            row,
            el("input")
                .with_attr(Attr::Name, name)
                .with_attr(Attr::Id, id)
                .with_attr(Attr::Class, class),
        ));
    }
    let search = p.add(
        0,
        text("button", "Search")
            .with_attr(Attr::Id, "search")
            .with_attr(Attr::Class, "submit"),
    );
    let instr = instruction(&[("from", &from), ("to", &to), ("date", &date)]);
    let actions: Vec<_> = (0..3)
        .map(|f| CompositeAction::type_field(inputs[f], f))
        .collect();
    finish(instr, p.build(), &actions, inputs, vec![search], 4)
}

/// Whether the goal page has `id` activated.
#[cfg(test)]
fn goal_active(task: &Task, id: ElementId) -> bool {
    task.goal
        .tree
        .get(id)
        .is_some_and(|e| e.attr(Attr::Class).split_whitespace().any(|c| c == super::semantics::ACTIVE_CLASS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn vocabularies_are_distinct_and_sized() {
        let s = SuiteScale::default();
        let mut d = dates(30);
        d.sort();
        d.dedup();
        assert_eq!(d.len(), 30);
        let mut pw = passwords(30);
        pw.sort();
        pw.dedup();
        assert_eq!(pw.len(), 30);
        assert_eq!(airports(s.airports).len(), 20);
        assert_eq!(airports(45)[44], "AP44");
    }

    #[test]
    fn pages_stay_under_the_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in EnvKind::ALL {
            for _ in 0..20 {
                let task = kind.generate(&mut rng, &SuiteScale::default());
                assert!(task.initial.len() <= crate::dom::DEFAULT_ELEMENT_CAP);
                assert!(!task.goal.is_satisfied(&task.initial).unwrap(), "{}", kind.name());
                for id in &task.goal.relevant {
                    assert!(task.initial.get(*id).unwrap().is_leaf);
                }
            }
        }
    }

    #[test]
    fn social_media_task_length() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut longest = 0;
        for _ in 0..200 {
            let t = EnvKind::SocialMediaMini.generate(&mut rng, &SuiteScale::default());
            assert_eq!(t.max_steps, 6);
            let active = t.goal.relevant.iter().filter(|&&id| goal_active(&t, id)).count();
            longest = longest.max(active + 1);
        }
        assert_eq!(longest, 6);
    }
}
