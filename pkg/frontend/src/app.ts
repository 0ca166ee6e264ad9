// Two-pane workbench: search on the left, conversation on the right,
// mirroring the collection tool. Eval mode adds per-turn attribute
// checkboxes and a final rating modal.

import { Annotation, ApiClient, PersonaOptions, Role } from "./api.js";
import { renderTopicPersona, validatePersonaChoice } from "./persona.js";
import { SessionView } from "./state.js";

const ATTRIBUTES: Array<{ key: keyof Annotation; label: string }> = [
  { key: "consistent", label: "Consistent" },
  { key: "engaging", label: "Engaging" },
  { key: "knowledgeable", label: "Knowledgeable" },
  { key: "factually_incorrect", label: "Factually incorrect" },
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class WorkbenchApp {
  private view: SessionView | null = null;
  private options: PersonaOptions | null = null;
  private root: HTMLElement;
  private draft: Partial<Annotation> = {};

  constructor(
    root: HTMLElement,
    private api: ApiClient = new ApiClient(""),
  ) {
    this.root = root;
  }

  async boot() {
    this.renderRolePicker();
  }

  // ---- role + persona flow -------------------------------------------------

  private renderRolePicker() {
    this.root.replaceChildren();
    const panel = el("div", "card centered");
    panel.append(el("h1", "", "Wizard Workbench"));
    panel.append(
      el("p", "hint", "Collect a grounded dialogue, or evaluate the bot."),
    );
    for (const role of ["wizard", "eval"] as Role[]) {
      const button = el(
        "button",
        "primary",
        role === "wizard" ? "Collect (wizard)" : "Evaluate the bot",
      );
      button.addEventListener("click", () => void this.startSession(role));
      panel.append(button);
    }
    this.root.append(panel);
  }

  private async startSession(role: Role) {
    this.view = new SessionView(this.api, role);
    this.options = await this.view.start();
    if (role === "wizard") {
      this.renderPersonaFlow();
    } else {
      this.renderWorkbench();
    }
  }

  private renderPersonaFlow() {
    const options = this.options!;
    this.root.replaceChildren();
    const panel = el("div", "card centered");
    panel.append(el("h2", "", "Choose your partner's persona"));
    let picked: string | null = null;

    const list = el("div", "persona-list");
    const buttons: HTMLButtonElement[] = [];
    const choose = (value: string, button: HTMLButtonElement) => {
      picked = value;
      buttons.forEach((b) => b.classList.remove("chosen"));
      button.classList.add("chosen");
    };
    for (const persona of options.personas) {
      const button = el("button", "persona", persona);
      button.addEventListener("click", () => choose(persona, button));
      buttons.push(button);
      list.append(button);
    }
    for (const topic of options.topics) {
      const wrap = el("div", "topic-row");
      const item = el("input") as HTMLInputElement;
      item.placeholder = `favorite ${topic}…`;
      const button = el("button", "persona", `Use topic: ${topic}`);
      button.addEventListener("click", () => {
        if (!item.value.trim()) return;
        choose(
          renderTopicPersona(options.topic_template, topic, item.value.trim()),
          button,
        );
      });
      wrap.append(button, item);
      list.append(wrap);
    }
    panel.append(list);

    const refinement = el("input") as HTMLInputElement;
    refinement.placeholder = "One extra sentence to refine it (optional)";
    panel.append(refinement);
    const error = el("p", "error");
    panel.append(error);

    const submit = el("button", "primary", "Start the conversation");
    submit.addEventListener("click", async () => {
      const checked = validatePersonaChoice(picked, refinement.value);
      if (!checked.ok) {
        error.textContent = checked.error;
        return;
      }
      if (!checked.choice.refinement) {
        error.textContent = "No refinement given — that's allowed, starting…";
      }
      await this.view!.choosePersona(
        checked.choice.persona,
        checked.choice.refinement,
      );
      this.renderWorkbench();
    });
    panel.append(submit);
    this.root.append(panel);
  }

  // ---- main two-pane layout --------------------------------------------------

  private renderWorkbench() {
    const view = this.view!;
    this.root.replaceChildren();
    const layout = el("div", "workbench");
    layout.append(this.renderSearchPane(), this.renderChatPane());
    this.root.append(layout);
    if (view.showRatingModal()) this.renderRatingModal();
  }

  private renderSearchPane(): HTMLElement {
    const view = this.view!;
    const pane = el("section", "pane search-pane");
    pane.append(el("h2", "", "Search"));
    if (view.role === "eval") {
      pane.append(
        el("p", "hint", "The bot does its own searching in this mode."),
      );
      pane.append(el("p", "persona-note", view.state!.persona.join(" ")));
      return pane;
    }

    const form = el("div", "search-form");
    const input = el("input") as HTMLInputElement;
    input.placeholder = "search the snapshot…";
    input.value = view.lastQuery;
    const news = el("input") as HTMLInputElement;
    news.type = "checkbox";
    news.checked = true;
    news.id = "augment-news";
    const newsLabel = el("label", "news-toggle", "add news results");
    newsLabel.setAttribute("for", news.id);
    const go = el("button", "primary", "Search");
    const run = async () => {
      if (!input.value.trim()) return;
      await view.search(input.value, news.checked);
      this.renderWorkbench();
    };
    go.addEventListener("click", () => void run());
    input.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter") void run();
    });
    form.append(input, go, news, newsLabel);
    pane.append(form);

    if (view.searchError) {
      pane.append(el("p", "error", `search failed: ${view.searchError}`));
    }

    const results = el("div", "results");
    for (const doc of view.results) {
      const details = el("details", "result");
      const summary = el("summary");
      summary.append(el("span", "title", doc.title || doc.url));
      if (doc.news) summary.append(el("span", "badge", "news"));
      details.append(summary);
      const body = el("div", "sentences");
      for (const row of view.sentenceRows(doc)) {
        const label = el("label", "sentence");
        const box = el("input") as HTMLInputElement;
        box.type = "checkbox";
        box.checked = row.selected;
        box.disabled = row.selected; // selections stick for the whole turn
        box.addEventListener("change", async () => {
          await view.select(row.docUrl, row.sentence);
          this.renderWorkbench();
        });
        label.append(box, el("span", "", row.sentence));
        body.append(label);
      }
      details.append(body);
      results.append(details);
    }
    pane.append(results);

    const pendingCount = view.state!.pending.selected.length;
    pane.append(
      el("p", "hint", `${pendingCount} sentence(s) selected for this turn`),
    );
    return pane;
  }

  private renderChatPane(): HTMLElement {
    const view = this.view!;
    const state = view.state!;
    const pane = el("section", "pane chat-pane");
    pane.append(el("h2", "", "Conversation"));

    const thread = el("div", "thread");
    state.messages.forEach((msg, idx) => {
      const bubble = el("div", `message ${msg.speaker}`);
      bubble.append(el("span", "speaker", msg.speaker));
      bubble.append(el("p", "", msg.text));
      if (msg.selected.length > 0) {
        bubble.append(
          el("p", "grounding", `${msg.selected.length} grounding sentence(s)`),
        );
      }
      if (view.role === "eval" && msg.speaker === "wizard") {
        bubble.append(this.renderAnnotationRow(idx, msg.annotation));
      }
      thread.append(bubble);
    });
    pane.append(thread);

    const composer = el("div", "composer");
    const input = el("input") as HTMLInputElement;
    input.placeholder =
      state.at_limit ? "turn limit reached" : "type your message…";
    input.disabled = state.at_limit;
    const send = el("button", "primary", "Send");
    const blocked = view.sendBlockedByAnnotation();
    send.disabled = state.at_limit || blocked;
    if (blocked) {
      composer.append(
        el("p", "hint", "Annotate the bot's last message first."),
      );
    }
    const submit = async () => {
      if (!input.value.trim()) return;
      await view.send(input.value);
      this.draft = {};
      this.renderWorkbench();
    };
    send.addEventListener("click", () => void submit());
    input.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter" && !send.disabled) void submit();
    });
    composer.append(input, send);
    pane.append(composer);

    const exportButton = el("button", "ghost", "Export JSONL");
    exportButton.addEventListener("click", async () => {
      const text = await view.exportSession();
      const blob = new Blob([text], { type: "application/x-ndjson" });
      const link = el("a") as HTMLAnchorElement;
      link.href = URL.createObjectURL(blob);
      link.download = `${view.id}.jsonl`;
      link.click();
      URL.revokeObjectURL(link.href);
    });
    pane.append(exportButton);
    return pane;
  }

  private renderAnnotationRow(
    idx: number,
    saved: Annotation | null,
  ): HTMLElement {
    const view = this.view!;
    const row = el("div", "annotation");
    for (const { key, label } of ATTRIBUTES) {
      const wrap = el("label", "attr");
      const box = el("input") as HTMLInputElement;
      box.type = "checkbox";
      box.checked = saved ? saved[key] : Boolean(this.draft[key]);
      box.disabled = saved !== null;
      box.addEventListener("change", () => {
        this.draft[key] = box.checked;
      });
      wrap.append(box, el("span", "", label));
      row.append(wrap);
    }
    if (saved === null) {
      const save = el("button", "small", "Save annotation");
      save.addEventListener("click", async () => {
        await view.annotate(idx, this.draft);
        this.draft = {};
        this.renderWorkbench();
      });
      row.append(save);
    } else {
      row.append(el("span", "saved", "annotated"));
    }
    return row;
  }

  private renderRatingModal() {
    const view = this.view!;
    const overlay = el("div", "overlay");
    const modal = el("div", "card modal");
    modal.append(el("h2", "", "How engaging was your partner overall?"));
    const stars = el("div", "stars");
    for (let rating = 1; rating <= 5; rating++) {
      const button = el("button", "star", String(rating));
      button.addEventListener("click", async () => {
        await view.rate(rating);
        overlay.remove();
        this.renderWorkbench();
      });
      stars.append(button);
    }
    modal.append(stars);
    overlay.append(modal);
    this.root.append(overlay);
  }
}

if (typeof document !== "undefined" && document.getElementById("app")) {
  const app = new WorkbenchApp(document.getElementById("app")!);
  void app.boot();
}
