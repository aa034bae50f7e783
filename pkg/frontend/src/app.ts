import { ConsoleApi } from "./api.js";
import { ConsoleController } from "./model.js";
import {
  renderBanner,
  renderBubbles,
  renderDraftPanel,
  renderExecuteButton,
  renderPortfolio,
  renderStatusLine,
} from "./render.js";

const POLL_MS = 500;

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (!found) {
    throw new Error(`missing element #${id}`);
  }
  return found as T;
}

async function main(): Promise<void> {
  const base = (window as { TRADETALK_BASE_URL?: string }).TRADETALK_BASE_URL ?? "";
  const controller = new ConsoleController(new ConsoleApi(base));

  const chat = element<HTMLDivElement>("chat");
  const draft = element<HTMLDivElement>("draft");
  const banner = element<HTMLDivElement>("banner");
  const portfolio = element<HTMLDivElement>("portfolio");
  const status = element<HTMLDivElement>("status");
  const executeSlot = element<HTMLDivElement>("execute-slot");
  const input = element<HTMLInputElement>("message");
  const send = element<HTMLButtonElement>("send");

  function paint(): void {
    chat.innerHTML = renderBubbles(controller.model);
    chat.scrollTop = chat.scrollHeight;
    draft.innerHTML = renderDraftPanel(controller.model);
    banner.innerHTML = renderBanner(controller.model);
    portfolio.innerHTML = renderPortfolio(controller.model);
    status.innerHTML = renderStatusLine(controller.model);
    executeSlot.innerHTML = renderExecuteButton(controller.model);
    const button = document.getElementById("execute") as HTMLButtonElement | null;
    button?.addEventListener("click", () => {
      void controller.confirmExecute().then(paint);
      paint(); // immediate repaint disables the button against double clicks
    });
  }

  async function submit(): Promise<void> {
    const text = input.value.trim();
    if (!text) {
      return;
    }
    // poll the session view while the provider round-trip is pending
    const poller = window.setInterval(() => {
      void controller.poll().then(paint);
    }, POLL_MS);
    const sent = await controller.sendMessage(text).finally(() => {
      window.clearInterval(poller);
    });
    if (sent) {
      input.value = ""; // errors keep the input for retry
    }
    paint();
  }

  send.addEventListener("click", () => void submit());
  input.addEventListener("keydown", (event) => {
    if (event.key === "Enter") {
      void submit();
    }
  });

  await controller.start();
  await controller.refreshPortfolio();
  paint();
}

document.addEventListener("DOMContentLoaded", () => void main());
