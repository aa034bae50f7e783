import { ApiError, ConsoleApi } from "./api.js";
import type { SessionView, WireDraft } from "./types.js";

export interface Bubble {
  who: "user" | "system" | "error";
  text: string;
}

export interface Banner {
  kind: "none" | "fill" | "warning";
  text: string;
}

export interface ViewModel {
  sessionId: string | null;
  state: string;
  bubbles: Bubble[];
  draft: WireDraft | null;
  pendingField: string | null;
  executeEnabled: boolean;
  executing: boolean;
  awaitingReply: boolean;
  banner: Banner;
  positions: Record<string, number>;
}

export function emptyModel(): ViewModel {
  return {
    sessionId: null,
    state: "await_input",
    bubbles: [],
    draft: null,
    pendingField: null,
    executeEnabled: false,
    executing: false,
    awaitingReply: false,
    banner: { kind: "none", text: "" },
    positions: {},
  };
}

/**
 * Drives one chat session.  Every value shown in the model comes verbatim
 * from a service response; the controller never invents field values.
 */
export class ConsoleController {
  readonly model: ViewModel = emptyModel();

  constructor(private readonly api: ConsoleApi) {}

  async start(): Promise<void> {
    const view = await this.api.createSession();
    this.model.sessionId = view.session_id;
    this.applyView(view);
  }

  /** POST the user's message; returns false when the input should be kept. */
  async sendMessage(text: string): Promise<boolean> {
    if (!this.model.sessionId || this.model.awaitingReply) {
      return false;
    }
    this.model.bubbles.push({ who: "user", text });
    this.model.awaitingReply = true;
    try {
      const view = await this.api.postMessage(this.model.sessionId, text);
      this.applyView(view);
      return true;
    } catch (error) {
      this.model.bubbles.push({ who: "error", text: describe(error) });
      return false;
    } finally {
      this.model.awaitingReply = false;
    }
  }

  /** POST execute exactly once; re-entry while in flight is a no-op. */
  async confirmExecute(): Promise<void> {
    if (!this.model.sessionId || !this.model.executeEnabled || this.model.executing) {
      return;
    }
    this.model.executing = true;
    this.model.executeEnabled = false;
    try {
      const view = await this.api.execute(this.model.sessionId);
      this.applyView(view);
      await this.refreshPortfolio();
    } catch (error) {
      if (error instanceof ApiError && error.status === 422) {
        // oversell: draft stays on screen, order still ready server-side
        this.model.banner = { kind: "warning", text: error.detail };
        this.model.executeEnabled = true;
      } else {
        this.model.bubbles.push({ who: "error", text: describe(error) });
      }
    } finally {
      this.model.executing = false;
    }
  }

  /** Refresh the session view (the 500 ms poll while a reply is pending). */
  async poll(): Promise<void> {
    if (!this.model.sessionId) {
      return;
    }
    this.applyView(await this.api.getSession(this.model.sessionId));
  }

  async refreshPortfolio(): Promise<void> {
    const view = await this.api.portfolio();
    this.model.positions = view.positions;
  }

  private applyView(view: SessionView): void {
    this.model.state = view.state;
    this.model.draft = view.draft;
    this.model.pendingField = view.pending_field;
    this.model.executeEnabled = view.state === "ready_to_execute";
    for (const message of view.messages) {
      if (message.kind === "report") {
        continue; // the banner carries the fill, not a bubble
      }
      this.model.bubbles.push({ who: "system", text: message.text });
    }
    if (view.state === "executed" && view.report) {
      const price = JSON.stringify(view.report.fill_price);
      const tick = JSON.stringify(view.report.fill_tick);
      this.model.banner = { kind: "fill", text: `Filled @ ${price} (tick ${tick})` };
    } else if (view.state === "failed" && view.reason) {
      this.model.banner = { kind: "warning", text: view.reason };
    }
  }
}

function describe(error: unknown): string {
  if (error instanceof ApiError) {
    return `service error ${error.status}: ${error.detail}`;
  }
  return error instanceof Error ? error.message : String(error);
}
