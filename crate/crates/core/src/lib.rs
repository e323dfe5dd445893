//! Energy-efficient TDM-PON wake-up scheduling.
//!
//! The crate has two halves. The scheduling half turns per-ONU protocol
//! state into feasible slot windows ([`windows`]), assembles them into a
//! capacitated assignment problem ([`model`]), and solves it with the
//! recursive FDOS algorithm ([`fdos`]) on top of a transportation-problem
//! solver ([`transport`]); an exhaustive solver ([`oracle`]) provides ground
//! truth at desk scale. The simulation half ([`sim`], [`traffic`]) is a
//! discrete-event EPON model (IPACT polling, limited-scheme grants, ONU
//! sleep modes, OLT wake-up messages) that measures energy and delay for
//! the baseline sleep protocol and for FDOS-driven wake-up scheduling.

pub mod fdos;
pub mod gen;
pub mod model;
pub mod oracle;
pub mod sim;
pub mod traffic;
pub mod transport;
pub mod windows;

pub use model::{Assignment, AssignmentProblem, Duration, PowerProfile, SleepMode, TimePoint};
