import { ApiClient } from "./api.js";
import {
  ApiError,
  ContextCardOut,
  CorpusOut,
  SessionOut,
  TextCardOut,
} from "./types.js";

/** Pure projection of API responses plus transient input. The only
 *  client-owned fields are selections, panel collapse, and pending flags. */
interface ViewState {
  corpus: CorpusOut | null;
  sessionId: string | null;
  session: SessionOut | null;
  selectedSubjects: Set<string>;
  selectedMaterials: Set<string>;
  configCollapsed: boolean;
  activeContextId: string | null;
  expectedLessons: number;
  pending: Set<string>;
  lastError: string | null;
}

export class App {
  readonly state: ViewState = {
    corpus: null,
    sessionId: null,
    session: null,
    selectedSubjects: new Set(),
    selectedMaterials: new Set(),
    configCollapsed: false,
    activeContextId: null,
    expectedLessons: 7,
    pending: new Set(),
    lastError: null,
  };

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
  ) {}

  async start(): Promise<void> {
    this.state.corpus = await this.client.getCorpus();
    this.render();
  }

  /** Wraps an action: pending affordance, one API call, state refresh. */
  private async run(key: string, action: () => Promise<void>): Promise<void> {
    this.state.pending.add(key);
    this.state.lastError = null;
    this.render();
    try {
      await action();
      if (this.state.sessionId) {
        this.state.session = await this.client.getSession(this.state.sessionId);
      }
    } catch (err) {
      this.state.lastError =
        err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    } finally {
      this.state.pending.delete(key);
      this.render();
    }
  }

  // -- actions --------------------------------------------------------------

  createSession(): Promise<void> {
    return this.run("create", async () => {
      this.state.sessionId = await this.client.createSession(
        [...this.state.selectedSubjects],
        [...this.state.selectedMaterials],
      );
      this.state.configCollapsed = true;
    });
  }

  recommend(): Promise<void> {
    return this.run("recommend", async () => {
      await this.client.recommendContexts(this.state.sessionId!);
    });
  }

  addManualContext(title: string, background: string): Promise<void> {
    return this.run("manual", async () => {
      await this.client.addManualContext(this.state.sessionId!, title, background);
    });
  }

  toggleStar(cardId: string, starred: boolean): Promise<void> {
    return this.run(`star:${cardId}`, async () => {
      if (starred) {
        await this.client.unstar(this.state.sessionId!, cardId);
      } else {
        await this.client.star(this.state.sessionId!, cardId);
      }
    });
  }

  deleteCard(cardId: string): Promise<void> {
    return this.run(`delete:${cardId}`, async () => {
      await this.client.deleteCard(this.state.sessionId!, cardId);
      if (this.state.activeContextId === cardId) {
        this.state.activeContextId = null;
      }
    });
  }

  find(cardId: string, question: string): Promise<void> {
    return this.run(`find:${cardId}`, async () => {
      await this.client.find(this.state.sessionId!, cardId, question);
    });
  }

  edit(cardId: string, newText: string): Promise<void> {
    return this.run(`edit:${cardId}`, async () => {
      await this.client.edit(this.state.sessionId!, cardId, newText);
    });
  }

  analyzeBatch(contextCardId: string): Promise<void> {
    return this.run(`analyze:${contextCardId}`, async () => {
      await this.client.analyzeBatch(this.state.sessionId!, contextCardId);
    });
  }

  addText(contextCardId: string, materialId: string): Promise<void> {
    return this.run(`addtext:${contextCardId}`, async () => {
      await this.client.addText(this.state.sessionId!, contextCardId, materialId);
    });
  }

  generatePlan(contextCardId: string): Promise<void> {
    return this.run("plan", async () => {
      await this.client.generatePlan(
        this.state.sessionId!,
        contextCardId,
        this.state.expectedLessons,
      );
    });
  }

  generateActivities(contextCardId: string): Promise<void> {
    return this.run("activities", async () => {
      await this.client.generateActivities(this.state.sessionId!, contextCardId);
    });
  }

  deleteActivity(title: string): Promise<void> {
    return this.run(`delact:${title}`, async () => {
      await this.client.deleteActivity(this.state.sessionId!, title);
    });
  }

  // -- rendering ------------------------------------------------------------

  render(): void {
    this.root.replaceChildren(
      this.renderErrorBar(),
      this.renderConfigPanel(),
      this.renderWorkspace(),
      this.renderOutcomePanel(),
    );
  }

  private el(
    tag: string,
    attrs: Record<string, string> = {},
    children: (Node | string)[] = [],
  ): HTMLElement {
    const node = document.createElement(tag);
    for (const [k, v] of Object.entries(attrs)) {
      node.setAttribute(k, v);
    }
    node.append(...children);
    return node;
  }

  private button(
    label: string,
    key: string,
    onClick: () => void,
    testId: string,
  ): HTMLElement {
    const pending = this.state.pending.has(key);
    const btn = this.el("button", { "data-testid": testId }, [
      pending ? `${label}…` : label,
    ]) as HTMLButtonElement;
    btn.disabled = pending;
    btn.addEventListener("click", onClick);
    return btn;
  }

  private renderErrorBar(): HTMLElement {
    const bar = this.el("div", { class: "error-bar", "data-testid": "error-bar" });
    if (this.state.lastError) {
      bar.textContent = this.state.lastError;
      bar.classList.add("visible");
    }
    return bar;
  }

  private renderConfigPanel(): HTMLElement {
    const panel = this.el("section", {
      class: "config-panel",
      "data-testid": "config-panel",
    });
    const header = this.el("h2", {}, ["Session setup"]);
    const toggle = this.button(
      this.state.configCollapsed ? "Expand" : "Collapse",
      "noop",
      () => {
        this.state.configCollapsed = !this.state.configCollapsed;
        this.render();
      },
      "config-toggle",
    );
    panel.append(header, toggle);
    if (this.state.configCollapsed || !this.state.corpus) {
      return panel;
    }

    const subjects = this.el("fieldset", { "data-testid": "subject-list" }, [
      this.el("legend", {}, ["Subjects"]),
    ]);
    for (const subject of this.state.corpus.subjects) {
      subjects.append(
        this.checkbox(subject, this.state.selectedSubjects, `subject-${subject}`),
      );
    }
    const materials = this.el("fieldset", { "data-testid": "material-list" }, [
      this.el("legend", {}, ["Reading materials"]),
    ]);
    for (const material of this.state.corpus.materials) {
      materials.append(
        this.checkbox(material.id, this.state.selectedMaterials,
          `material-${material.id}`, material.title),
      );
    }
    panel.append(
      subjects,
      materials,
      this.button("Start session", "create", () => void this.createSession(),
        "create-session"),
    );
    return panel;
  }

  private checkbox(
    value: string,
    target: Set<string>,
    testId: string,
    label?: string,
  ): HTMLElement {
    const input = this.el("input", {
      type: "checkbox",
      "data-testid": testId,
    }) as HTMLInputElement;
    input.checked = target.has(value);
    input.addEventListener("change", () => {
      if (input.checked) {
        target.add(value);
      } else {
        target.delete(value);
      }
    });
    return this.el("label", { class: "check" }, [input, label ?? value]);
  }

  private renderWorkspace(): HTMLElement {
    const workspace = this.el("main", { class: "workspace" });
    if (!this.state.session) {
      workspace.append(this.el("p", { class: "hint" }, [
        "Select subjects and materials, then start a session.",
      ]));
      return workspace;
    }
    workspace.append(
      this.renderContextsPane(),
      this.renderTextsPane(),
      this.renderCollectionPane(),
    );
    return workspace;
  }

  private renderContextsPane(): HTMLElement {
    const session = this.state.session!;
    const pane = this.el("section", {
      class: "pane contexts-pane",
      "data-testid": "contexts-pane",
    }, [this.el("h2", {}, ["Contexts"])]);

    const label = session.context_cards.length
      ? "More contexts"
      : "Generate recommended contexts";
    pane.append(this.button(label, "recommend", () => void this.recommend(),
      "recommend"));

    const form = this.el("div", { class: "manual-form" });
    const title = this.el("input", {
      placeholder: "Context title",
      "data-testid": "manual-title",
    }) as HTMLInputElement;
    const background = this.el("input", {
      placeholder: "Background",
      "data-testid": "manual-background",
    }) as HTMLInputElement;
    form.append(
      title,
      background,
      this.button("Add context", "manual", () => {
        if (title.value.trim()) {
          void this.addManualContext(title.value.trim(), background.value.trim());
        }
      }, "manual-add"),
    );
    pane.append(form);

    for (const card of session.context_cards) {
      pane.append(this.renderContextCard(card));
    }
    return pane;
  }

  private renderContextCard(card: ContextCardOut): HTMLElement {
    const starred = card.state === "starred";
    const node = this.el("article", {
      class: `card context-card${starred ? " starred" : ""}`,
      "data-testid": `context-card-${card.card_id}`,
      "data-state": card.state,
    });
    node.append(
      this.el("h3", {}, [`${card.title} `, this.el("small", {}, [card.subject])]),
    );
    if (card.error) {
      node.append(this.el("p", { class: "card-error" }, [card.error]));
    }
    const description = this.el("p", {
      class: "description",
      "data-testid": `context-description-${card.card_id}`,
      title: "Double-click to edit",
    }, [card.description]);
    description.addEventListener("dblclick", () =>
      this.startInlineEdit(description, card.card_id, card.description));
    node.append(description);
    if (card.relevant_material_titles.length) {
      node.append(this.el("p", { class: "relevant" }, [
        `Most relevant: ${card.relevant_material_titles.join(", ")}`,
      ]));
    }
    node.append(this.renderQaThread(card.qa_thread, card.card_id));
    node.append(this.renderFindForm(card.card_id));

    const actions = this.el("div", { class: "actions" });
    actions.append(
      this.button(starred ? "Unstar" : "Star", `star:${card.card_id}`,
        () => void this.toggleStar(card.card_id, starred),
        `star-${card.card_id}`),
      this.button("Delete", `delete:${card.card_id}`,
        () => void this.deleteCard(card.card_id),
        `delete-${card.card_id}`),
      this.button("Explore texts →", "noop", () => {
        this.state.activeContextId = card.card_id;
        this.render();
      }, `explore-${card.card_id}`),
    );
    node.append(actions);
    return node;
  }

  private renderTextsPane(): HTMLElement {
    const pane = this.el("section", {
      class: "pane texts-pane",
      "data-testid": "texts-pane",
    }, [this.el("h2", {}, ["Texts"])]);
    const card = this.activeContext();
    if (!card) {
      pane.append(this.el("p", { class: "hint" }, [
        "Pick a context and press “Explore texts”.",
      ]));
      return pane;
    }
    pane.append(this.el("p", { class: "focus-title" }, [`Theme: ${card.title}`]));
    pane.append(this.button("Analyze texts", `analyze:${card.card_id}`,
      () => void this.analyzeBatch(card.card_id), "analyze"));

    const picker = this.el("select", { "data-testid": "add-text-material" });
    const analyzed = new Set(card.text_cards.map((t) => t.material_id));
    for (const material of this.state.corpus?.materials ?? []) {
      if (this.state.session!.material_ids.includes(material.id) &&
          !analyzed.has(material.id)) {
        picker.append(this.el("option", { value: material.id }, [material.title]));
      }
    }
    pane.append(
      picker,
      this.button("Add text", `addtext:${card.card_id}`, () => {
        const materialId = (picker as HTMLSelectElement).value;
        if (materialId) {
          void this.addText(card.card_id, materialId);
        }
      }, "add-text"),
    );

    for (const text of card.text_cards) {
      pane.append(this.renderTextCard(text));
    }
    return pane;
  }

  private renderTextCard(card: TextCardOut): HTMLElement {
    const starred = card.state === "starred";
    const node = this.el("article", {
      class: `card text-card${starred ? " starred" : ""}`,
      "data-testid": `text-card-${card.card_id}`,
      "data-state": card.state,
    });
    node.append(this.el("h3", {}, [card.material_title]));
    const content = this.el("div", {
      class: "analysis",
      "data-testid": `text-content-${card.card_id}`,
      title: "Double-click to edit",
    }, [card.content]);
    content.addEventListener("dblclick", () =>
      this.startInlineEdit(content, card.card_id, card.content));
    node.append(content);
    if (card.review) {
      node.append(this.el("p", { class: "review" }, [
        `Reviewer: ${card.review.rating}/5 — ${card.review.critique}`,
      ]));
    }
    for (const warning of card.warnings) {
      node.append(this.el("p", { class: "warning" }, [warning]));
    }
    node.append(this.renderQaThread(card.qa_thread, card.card_id));
    node.append(this.renderFindForm(card.card_id));
    const actions = this.el("div", { class: "actions" });
    actions.append(
      this.button(starred ? "Unstar" : "Star", `star:${card.card_id}`,
        () => void this.toggleStar(card.card_id, starred),
        `star-${card.card_id}`),
      this.button("Delete", `delete:${card.card_id}`,
        () => void this.deleteCard(card.card_id),
        `delete-${card.card_id}`),
    );
    node.append(actions);
    return node;
  }

  private renderQaThread(thread: [string, string][], cardId: string): HTMLElement {
    const list = this.el("dl", {
      class: "qa-thread",
      "data-testid": `qa-${cardId}`,
    });
    for (const [question, answer] of thread) {
      list.append(this.el("dt", {}, [question]), this.el("dd", {}, [answer]));
    }
    return list;
  }

  private renderFindForm(cardId: string): HTMLElement {
    const input = this.el("input", {
      placeholder: "Ask about this card",
      "data-testid": `find-input-${cardId}`,
    }) as HTMLInputElement;
    const form = this.el("div", { class: "find-form" }, [
      input,
      this.button("Find", `find:${cardId}`, () => {
        if (input.value.trim()) {
          void this.find(cardId, input.value.trim());
        }
      }, `find-${cardId}`),
    ]);
    return form;
  }

  private startInlineEdit(target: HTMLElement, cardId: string, current: string): void {
    const editor = this.el("textarea", {
      "data-testid": `editor-${cardId}`,
    }) as HTMLTextAreaElement;
    editor.value = current;
    const save = this.button("Save", `edit:${cardId}`, () => {
      void this.edit(cardId, editor.value);
    }, `save-${cardId}`);
    target.replaceWith(this.el("div", { class: "editor" }, [editor, save]));
  }

  private renderCollectionPane(): HTMLElement {
    const session = this.state.session!;
    const pane = this.el("section", {
      class: "pane collection-pane",
      "data-testid": "collection-pane",
    }, [this.el("h2", {}, ["Collection"])]);
    const byId = new Map(session.context_cards.map((c) => [c.card_id, c]));
    for (const entry of session.collection) {
      const context = byId.get(entry.context_card_id);
      if (!context) {
        continue;
      }
      const texts = new Map(context.text_cards.map((t) => [t.card_id, t]));
      const item = this.el("article", {
        class: "collection-entry",
        "data-testid": `collection-${entry.context_card_id}`,
      }, [this.el("h3", {}, [context.title])]);
      const list = this.el("ul", {});
      for (const textId of entry.starred_text_card_ids) {
        const text = texts.get(textId);
        if (text) {
          list.append(this.el("li", {}, [text.material_title]));
        }
      }
      item.append(list);
      pane.append(item);
    }
    if (!session.collection.length) {
      pane.append(this.el("p", { class: "hint" }, [
        "Star a context and some texts to build your collection.",
      ]));
    }
    return pane;
  }

  private renderOutcomePanel(): HTMLElement {
    const panel = this.el("section", {
      class: "outcome-panel",
      "data-testid": "outcome-panel",
    }, [this.el("h2", {}, ["Outcome"])]);
    const session = this.state.session;
    if (!session) {
      return panel;
    }
    const starredContext = session.collection[0]?.context_card_id ?? null;

    const lessons = this.el("input", {
      type: "number",
      min: "1",
      value: String(this.state.expectedLessons),
      "data-testid": "lesson-count",
    }) as HTMLInputElement;
    lessons.addEventListener("change", () => {
      this.state.expectedLessons = Math.max(1, Number(lessons.value) || 1);
    });
    panel.append(
      this.el("label", {}, ["Expected number of lessons: ", lessons]),
      this.button("Generate introduction and course plan", "plan", () => {
        if (starredContext) {
          void this.generatePlan(starredContext);
        }
      }, "generate-plan"),
      this.button("Generate classroom activities", "activities", () => {
        if (starredContext) {
          void this.generateActivities(starredContext);
        }
      }, "generate-activities"),
    );
    if (!starredContext) {
      panel.append(this.el("p", { class: "hint" }, [
        "Generation needs a starred context with starred texts.",
      ]));
    }

    const outcome = session.outcome;
    if (outcome?.plan_text) {
      if (outcome.introduction) {
        panel.append(
          this.el("h3", {}, ["Introduction"]),
          this.el("p", { "data-testid": "introduction" }, [outcome.introduction]),
        );
      }
      panel.append(
        this.el("h3", {}, ["Course plan"]),
        this.el("pre", { "data-testid": "plan-text" }, [outcome.plan_text]),
      );
      for (const warning of outcome.warnings) {
        panel.append(this.el("p", { class: "warning" }, [warning]));
      }
      if (outcome.activities.length) {
        panel.append(this.el("h3", {}, ["Classroom activities"]));
        const list = this.el("ul", { "data-testid": "activities" });
        for (const activity of outcome.activities) {
          const title = this.el("strong", {
            class: "activity-title",
            title: "Click to delete this activity",
            "data-testid": `activity-${activity.title}`,
          }, [activity.title]);
          title.addEventListener("click", () =>
            void this.deleteActivity(activity.title));
          list.append(this.el("li", {}, [
            title, ` [${activity.kind}] ${activity.description}`,
          ]));
        }
        panel.append(list);
      }
      panel.append(this.el("p", { class: "downloads" }, [
        this.el("a", {
          href: this.client.downloadUrl(session.session_id, "txt"),
          download: "outcome.txt",
          "data-testid": "download-txt",
        }, ["Download .txt"]),
        " ",
        this.el("a", {
          href: this.client.downloadUrl(session.session_id, "html"),
          download: "outcome.html",
          "data-testid": "download-html",
        }, ["Download .html"]),
      ]));
    }
    return panel;
  }

  private activeContext(): ContextCardOut | null {
    const session = this.state.session;
    if (!session || !this.state.activeContextId) {
      return null;
    }
    return (
      session.context_cards.find((c) => c.card_id === this.state.activeContextId) ??
      null
    );
  }
}
