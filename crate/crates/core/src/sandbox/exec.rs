// Child process execution with a wall-clock watchdog and rlimits.

use std::io::{self, Read, Write};
use std::os::unix::process::CommandExt;
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

// Captured output beyond this is drained and dropped.
const MAX_CAPTURE_BYTES: usize = 64 << 20;

pub(crate) struct ExecRequest<'a> {
    pub argv: &'a [String],
    pub cwd: &'a Path,
    pub stdin: &'a [u8],
    pub kill_after: Duration,
    pub memory_limit_mb: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Exit {
    Code(i32),
    Signal(i32),
}

#[derive(Debug)]
pub(crate) struct ExecOutcome {
    pub exit: Exit,
    pub killed: bool,
    pub stdout: Vec<u8>,
    pub stderr: Vec<u8>,
    pub wall: Duration,
    pub peak_rss_kb: Option<u64>,
}

fn read_capped<R: Read>(mut reader: R) -> Vec<u8> {
    let mut buf = Vec::new();
    let mut chunk = [0u8; 16 * 1024];
    loop {
        match reader.read(&mut chunk) {
            Ok(0) => break,
            Ok(n) => {
                let room = MAX_CAPTURE_BYTES.saturating_sub(buf.len());
                buf.extend_from_slice(&chunk[..n.min(room)]);
            }
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(_) => break,
        }
    }
    buf
}

struct Reaped {
    status: libc::c_int,
    rusage: libc::rusage,
    at: Instant,
}

fn reap(pid: libc::pid_t) -> io::Result<Reaped> {
    let mut status: libc::c_int = 0;
    // SAFETY: zeroed rusage is a valid out-parameter.
    let mut rusage: libc::rusage = unsafe { std::mem::zeroed() };
    loop {
        // SAFETY: pid is our own un-reaped child; pointers are valid.
        let r = unsafe { libc::wait4(pid, &mut status, 0, &mut rusage) };
        if r == pid {
            return Ok(Reaped {
                status,
                rusage,
                at: Instant::now(),
            });
        }
        let err = io::Error::last_os_error();
        if err.kind() != io::ErrorKind::Interrupted {
            return Err(err);
        }
    }
}

fn kill_group(pid: libc::pid_t) {
    // SAFETY: plain syscall; ESRCH is fine.
    unsafe {
        libc::killpg(pid, libc::SIGKILL);
    }
}

pub(crate) fn execute(req: &ExecRequest<'_>) -> io::Result<ExecOutcome> {
    let (program, args) = req
        .argv
        .split_first()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "empty command"))?;
    let mut cmd = Command::new(program);
    cmd.args(args)
        .current_dir(req.cwd)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    let memory_bytes = req.memory_limit_mb.map(|mb| mb.saturating_mul(1 << 20));
    // SAFETY: only async-signal-safe calls between fork and exec.
    unsafe {
        cmd.pre_exec(move || {
            if libc::setpgid(0, 0) != 0 {
                return Err(io::Error::last_os_error());
            }
            let no_core = libc::rlimit {
                rlim_cur: 0,
                rlim_max: 0,
            };
            libc::setrlimit(libc::RLIMIT_CORE, &no_core);
            if let Some(bytes) = memory_bytes {
                let lim = libc::rlimit {
                    rlim_cur: bytes as libc::rlim_t,
                    rlim_max: bytes as libc::rlim_t,
                };
                libc::setrlimit(libc::RLIMIT_AS, &lim);
            }
            Ok(())
        });
    }

    let start = Instant::now();
    let mut child = cmd.spawn()?;
    let pid = child.id() as libc::pid_t;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = req.stdin.to_vec();
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(&input);
    });
    let stdout = child.stdout.take().expect("piped stdout");
    let stderr = child.stderr.take().expect("piped stderr");
    let out_reader = thread::spawn(move || read_capped(stdout));
    let err_reader = thread::spawn(move || read_capped(stderr));

    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let _ = tx.send(reap(pid));
    });

    let (reaped, killed, wall) = match rx.recv_timeout(req.kill_after) {
        Ok(r) => {
            let r = r?;
            let wall = r.at - start;
            (r, false, wall)
        }
        Err(_) => {
            let wall = start.elapsed();
            kill_group(pid);
            let r = rx
                .recv()
                .map_err(|_| io::Error::other("waiter thread vanished"))??;
            (r, true, wall)
        }
    };
    // Stray grandchildren may hold the pipes open.
    kill_group(pid);

    let _ = writer.join();
    let stdout = out_reader.join().unwrap_or_default();
    let stderr = err_reader.join().unwrap_or_default();
    // `child` was reaped by wait4 above; dropping it does not wait again.
    drop(child);

    let status = reaped.status;
    let exit = if libc::WIFSIGNALED(status) {
        Exit::Signal(libc::WTERMSIG(status))
    } else {
        Exit::Code(libc::WEXITSTATUS(status))
    };
    let maxrss = reaped.rusage.ru_maxrss;
    Ok(ExecOutcome {
        exit,
        killed,
        stdout,
        stderr,
        wall,
        peak_rss_kb: (maxrss > 0).then_some(maxrss as u64),
    })
}
