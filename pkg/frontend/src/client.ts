/** DOM shell and WebSocket wiring around the pure model and renderer. */

import { applyFrame, emptyModel, listKb, noteSent, UiModel } from "./model.js";
import {
  parseFrame,
  pauseMessage,
  placeObjectMessage,
  resetMessage,
  resumeMessage,
  setSeedMessage,
  utteranceMessage,
} from "./protocol.js";
import { renderArena } from "./render.js";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class App {
  model: UiModel = emptyModel();
  private ws: WebSocket | null = null;
  private retryMs = 1000;
  private dirty = true;
  private paused = false;

  private canvas: HTMLCanvasElement;
  private badge: HTMLElement;
  private speakerSel: HTMLSelectElement;
  private input: HTMLInputElement;
  private pauseBtn: HTMLButtonElement;
  private tabs = new Map<string, { button: HTMLButtonElement; panel: HTMLElement }>();

  constructor(
    private root: HTMLElement,
    private url: string,
  ) {
    this.badge = el("span", "badge", "connecting");
    this.canvas = el("canvas");
    this.canvas.width = 560;
    this.canvas.height = 560;
    this.speakerSel = el("select");
    this.input = el("input");
    this.input.placeholder = "say something, e.g. drive forward";
    this.pauseBtn = el("button", "", "pause");
    this.buildDom();
    this.connect();
    const loop = () => {
      if (this.dirty) {
        this.dirty = false;
        this.redraw();
      }
      requestAnimationFrame(loop);
    };
    requestAnimationFrame(loop);
  }

  private buildDom(): void {
    const bar = el("div", "bar");
    bar.append(el("strong", "", "sayso"), this.badge);

    const resetBtn = el("button", "", "reset");
    resetBtn.onclick = () => this.send(resetMessage());
    this.pauseBtn.onclick = () => {
      this.paused = !this.paused;
      this.pauseBtn.textContent = this.paused ? "resume" : "pause";
      this.send(this.paused ? pauseMessage() : resumeMessage());
    };
    const seed = el("input");
    seed.type = "number";
    seed.value = "0";
    seed.title = "seed used by the next reset";
    seed.onchange = () => this.send(setSeedMessage(Number(seed.value) || 0));
    const place = el("button", "", "place object");
    place.onclick = () => this.placeObjectDialog();
    bar.append(this.pauseBtn, resetBtn, el("label", "", "seed"), seed, place);

    const main = el("div", "main");
    const left = el("div", "left");
    left.append(this.canvas);

    const say = el("div", "say");
    const form = el("form");
    form.onsubmit = (ev) => {
      ev.preventDefault();
      this.say();
    };
    const go = el("button", "", "say");
    form.append(this.speakerSel, this.input, go);
    say.append(form);
    left.append(say);

    const right = el("div", "right");
    const tabBar = el("div", "tabbar");
    const panels = el("div", "panels");
    for (const name of ["transcript", "memory", "kb", "log"]) {
      const button = el("button", "tab", name);
      const panel = el("div", "panel");
      panel.dataset.name = name;
      button.onclick = () => this.showTab(name);
      this.tabs.set(name, { button, panel });
      tabBar.append(button);
      panels.append(panel);
    }
    right.append(tabBar, panels);

    main.append(left, right);
    this.root.append(bar, main);
    this.showTab("transcript");
  }

  private showTab(name: string): void {
    for (const [tabName, tab] of this.tabs) {
      const active = tabName === name;
      tab.button.classList.toggle("active", active);
      tab.panel.style.display = active ? "block" : "none";
    }
  }

  private placeObjectDialog(): void {
    const spec = window.prompt("name x y radius [fixed]", "crate 1.2 1.0 0.04");
    if (!spec) return;
    const parts = spec.trim().split(/\s+/);
    if (parts.length < 3) return;
    const [name, x, y] = [parts[0], Number(parts[1]), Number(parts[2])];
    const radius = parts.length > 3 ? Number(parts[3]) : 0.02;
    const graspable = parts[parts.length - 1] !== "fixed";
    if (Number.isNaN(x) || Number.isNaN(y) || Number.isNaN(radius)) return;
    this.send(placeObjectMessage(name, x, y, radius, graspable));
  }

  private connect(): void {
    this.badge.textContent = "connecting";
    this.badge.className = "badge";
    const ws = new WebSocket(this.url);
    this.ws = ws;
    ws.onopen = () => {
      this.retryMs = 1000;
      this.badge.textContent = "connected";
      this.badge.className = "badge ok";
    };
    ws.onmessage = (ev) => {
      const frame = parseFrame(String(ev.data));
      if (!frame) return;
      applyFrame(this.model, frame);
      this.dirty = true;
    };
    ws.onclose = () => {
      this.badge.textContent = "disconnected";
      this.badge.className = "badge bad";
      this.ws = null;
      setTimeout(() => this.connect(), this.retryMs);
      this.retryMs = Math.min(this.retryMs * 2, 10000);
    };
  }

  private send(message: string): void {
    if (this.ws && this.ws.readyState === WebSocket.OPEN) this.ws.send(message);
  }

  private say(): void {
    const text = this.input.value.trim();
    if (!text) return;
    const speaker = this.speakerSel.value || this.model.user;
    noteSent(this.model, speaker, text);
    this.send(utteranceMessage(text, speaker));
    this.input.value = "";
    this.dirty = true;
  }

  private redraw(): void {
    const ctx = this.canvas.getContext("2d");
    if (ctx) renderArena(ctx, this.model, this.canvas.width, this.canvas.height);

    const seen = new Set(Array.from(this.speakerSel.options).map((o) => o.value));
    for (const name of this.model.speakers) {
      if (!seen.has(name)) {
        const opt = document.createElement("option");
        opt.value = name;
        opt.textContent = name;
        this.speakerSel.append(opt);
      }
    }

    this.renderTranscript();
    this.renderMemory();
    this.renderKb();
    this.renderLog();
  }

  private renderTranscript(): void {
    const panel = this.tabs.get("transcript")!.panel;
    panel.replaceChildren(
      ...this.model.transcript.slice(-200).map((entry) => {
        const row = el("div", entry.who === "robot" ? "line robot" : "line");
        row.append(el("b", "", entry.who + ": "), el("span", "", entry.text));
        return row;
      }),
    );
    panel.scrollTop = panel.scrollHeight;
  }

  private renderMemory(): void {
    const panel = this.tabs.get("memory")!.panel;
    const sections = [
      ["attention", this.model.memory.attention],
      ["working", this.model.memory.working],
      ["halo", this.model.memory.halo],
    ] as const;
    panel.replaceChildren(
      ...sections.flatMap(([name, recs]) => {
        const head = el("h3", "", `${name} (${recs.length})`);
        const body = el("pre");
        body.textContent = recs
          .map((r) => {
            const edges = r.edges.map((e) => `-${e.role}-> #${e.to}`).join(" ");
            const flag = r.active ? "*" : " ";
            return `${flag}#${r.id} [${r.lex.join(" ")}] ${r.belief.toFixed(2)} ${edges}`;
          })
          .join("\n");
        return [head, body];
      }),
    );
  }

  private renderKb(): void {
    const panel = this.tabs.get("kb")!.panel;
    const listing = listKb(this.model.kbText);
    const head = el(
      "div",
      "kbsummary",
      `${listing.operators.length} operators, ${listing.rules.length} rules`,
    );
    const names = el("pre");
    names.textContent = [
      ...listing.operators.map((n) => `op    ${n}`),
      ...listing.rules.map((n) => `rule  ${n}`),
    ].join("\n");
    const full = el("pre", "kbtext");
    full.textContent = this.model.kbText;
    panel.replaceChildren(head, names, full);
  }

  private renderLog(): void {
    const panel = this.tabs.get("log")!.panel;
    const body = el("pre");
    body.textContent = this.model.eventLog.slice(-200).join("\n");
    panel.replaceChildren(body);
    panel.scrollTop = panel.scrollHeight;
  }
}

export function startApp(root: HTMLElement, url: string): App {
  return new App(root, url);
}
