use crate::minioo::ast::Pos;
use crate::xform::names;

use super::machine::Machine;
use super::value::{RemoteRef, Value};
use super::{ErrorKind, RuntimeError};

/// What a transformed program asks of its runtime: object creation and
/// class discovery (the policy points of `make`/`discover`), remote
/// forwarding, console output and checkpoints.
pub trait RuntimeHooks {
    /// `@create(A)` inside `A_O_Factory.make`.
    fn create(&mut self, m: &mut Machine, class: &str, pos: Pos) -> Result<Value, RuntimeError>;

    /// `@discover(A)` inside `A_C_Factory.discover`.
    fn discover(&mut self, m: &mut Machine, class: &str, pos: Pos) -> Result<Value, RuntimeError>;

    fn remote_invoke(
        &mut self,
        m: &mut Machine,
        target: &RemoteRef,
        member: &str,
        args: Vec<Value>,
        pos: Pos,
    ) -> Result<Value, RuntimeError>;

    /// `A_O_Factory.init(proxy, ...)`: initialisation runs where the object lives.
    fn remote_init(&mut self, m: &mut Machine, factory: &str, args: Vec<Value>, pos: Pos) -> Result<(), RuntimeError>;

    fn emit(&mut self, m: &mut Machine, line: String, _pos: Pos) -> Result<(), RuntimeError> {
        m.trace.push(line);
        Ok(())
    }

    /// `Runtime.checkpoint(tag)`.
    fn on_checkpoint(&mut self, _m: &mut Machine, _tag: &str, _pos: Pos) -> Result<(), RuntimeError> {
        Ok(())
    }
}

/// Single address space: `make` always builds `A_O_Local`, `discover`
/// always yields the `A_C_Local` singleton.
#[derive(Debug, Default, Clone, Copy)]
pub struct LocalHooks;

impl RuntimeHooks for LocalHooks {
    fn create(&mut self, m: &mut Machine, class: &str, pos: Pos) -> Result<Value, RuntimeError> {
        Ok(Value::Obj(m.instantiate(self, &names::o_local(class), Vec::new(), pos)?))
    }

    fn discover(&mut self, m: &mut Machine, class: &str, pos: Pos) -> Result<Value, RuntimeError> {
        m.local_discover(self, class, pos)
    }

    fn remote_invoke(&mut self, _: &mut Machine, target: &RemoteRef, member: &str, _: Vec<Value>, pos: Pos) -> Result<Value, RuntimeError> {
        Err(RuntimeError::new(ErrorKind::Transport, pos, format!("no remote runtime for {member} on {target}")))
    }

    fn remote_init(&mut self, _: &mut Machine, factory: &str, _: Vec<Value>, pos: Pos) -> Result<(), RuntimeError> {
        Err(RuntimeError::new(ErrorKind::Transport, pos, format!("no remote runtime for {factory}.init")))
    }
}
