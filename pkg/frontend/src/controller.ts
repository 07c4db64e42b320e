import { ApiClient, ApiError } from "./api.js";
import type { PoolInfo, Report, SessionState, StartRequest, TrajectoryPoint } from "./types.js";

export type Phase = "setup" | "testing" | "finished";

export interface ViewModel {
  phase: Phase;
  pools: PoolInfo[];
  session: SessionState | null;
  trajectory: TrajectoryPoint[];
  report: Report | null;
  /** Correct/Incorrect buttons are clickable only in this state. */
  gradeEnabled: boolean;
  busy: boolean;
  answerText: string | null;
  banner: string;
  error: string | null;
}

const initialView: ViewModel = {
  phase: "setup",
  pools: [],
  session: null,
  trajectory: [],
  report: null,
  gradeEnabled: false,
  busy: false,
  answerText: null,
  banner: "configure a session",
  error: null,
};

/**
 * The console's state machine. All numbers shown anywhere come from the
 * server payloads stored here; the controller never derives theta or SE.
 * Grade submissions are serialized: while one is in flight the buttons are
 * disabled, and a stale local state resyncs from the get-session endpoint.
 */
export class ConsoleController {
  view: ViewModel = { ...initialView };
  onChange: ((view: ViewModel) => void) | null = null;

  constructor(private readonly api: ApiClient) {}

  private update(patch: Partial<ViewModel>): void {
    this.view = { ...this.view, ...patch };
    this.onChange?.(this.view);
  }

  private applyState(state: SessionState): void {
    const stopped = state.status === "stopped";
    this.update({
      session: state,
      trajectory: state.trajectory,
      phase: stopped ? "finished" : "testing",
      report: state.report ?? this.view.report,
      gradeEnabled: !stopped && state.status === "awaiting_grade",
      busy: false,
      banner: stopped
        ? `stopped (${state.stop_reason}) after ${state.step} questions`
        : `step ${state.step + 1}: grade question ${state.question?.id ?? "?"}`,
      error: null,
    });
  }

  async loadPools(): Promise<void> {
    try {
      this.update({ pools: await this.api.listPools(), error: null });
    } catch (error) {
      this.update({ error: describe(error) });
    }
  }

  async start(request: StartRequest): Promise<void> {
    this.update({ busy: true, gradeEnabled: false, error: null, report: null, answerText: null });
    try {
      this.applyState(await this.api.createSession(request));
    } catch (error) {
      this.update({ busy: false, phase: "setup", error: describe(error) });
    }
  }

  /** Submit a verdict for the pending question; no-op unless grading is enabled. */
  async grade(correct: 0 | 1): Promise<void> {
    const session = this.view.session;
    if (!this.view.gradeEnabled || this.view.busy || !session) return;
    this.update({ busy: true, gradeEnabled: false });
    try {
      const state = await this.api.grade(session.session_id, session.step + 1, correct);
      this.applyState(state);
      if (state.status === "stopped" && !state.report) {
        this.update({ report: await this.api.getReport(session.session_id) });
      }
      this.update({ answerText: null });
    } catch (error) {
      if (error instanceof ApiError) {
        // stale local state (two tabs racing, a lost response): resync
        await this.resync();
        this.update({ error: describe(error) });
      } else {
        this.update({ busy: false, gradeEnabled: true, error: describe(error) });
      }
    }
  }

  async fetchAnswer(): Promise<void> {
    const session = this.view.session;
    if (!session) return;
    try {
      this.update({ answerText: await this.api.askExaminee(session.session_id) });
    } catch (error) {
      // adapter trouble never kills the session; the expert can paste manually
      this.update({ answerText: null, error: describe(error) });
    }
  }

  setManualAnswer(text: string): void {
    this.update({ answerText: text });
  }

  async resync(): Promise<void> {
    const session = this.view.session;
    if (!session) return;
    this.applyState(await this.api.getSession(session.session_id));
    if (this.view.phase === "finished" && !this.view.report) {
      this.update({ report: await this.api.getReport(session.session_id) });
    }
  }
}

function describe(error: unknown): string {
  return error instanceof Error ? error.message : String(error);
}
