// Wire shapes of the order service REST API.

export type TriStateValue = string | number | null;

export interface WireDraft {
  strategy: string | null;
  symbol: string | null;
  order_type: string | null;
  price: number | string | null;
  quantity: number | null;
}

export const DRAFT_FIELDS = [
  "strategy",
  "symbol",
  "order_type",
  "price",
  "quantity",
] as const;

export type DraftField = (typeof DRAFT_FIELDS)[number];

export interface WireReport {
  status: string;
  order: WireDraft;
  fill_price: number | null;
  fill_tick: number | null;
  reason: string | null;
}

export interface OutboundMessage {
  kind: "question" | "notice" | "report";
  text: string;
  field: string | null;
}

export interface SessionView {
  session_id: string;
  state: string;
  draft: WireDraft | null;
  pending_field: string | null;
  pending_question: string | null;
  turns_used: number | null;
  report: WireReport | null;
  reason: string | null;
  messages: OutboundMessage[];
}

export interface PortfolioView {
  positions: Record<string, number>;
}

export interface TradesView {
  trades: WireReport[];
}
