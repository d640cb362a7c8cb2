// DOM wiring: renders the store's view into a root element and forwards
// clicks/submits back into the store. Rendering is a full rebuild of the
// dynamic regions, so the page always mirrors the last server payloads.

import { radarGeometry, radarSvg } from "./radar.js";
import { SessionStore, SessionView } from "./store.js";

export function mountApp(root: HTMLElement, store: SessionStore): void {
  root.innerHTML = `
    <div class="app">
      <header><h1>guideq tutor</h1></header>
      <div class="error-banner" data-role="error" hidden></div>
      <div class="busy-notice" data-role="busy" hidden>
        The session is handling another turn; try again in a moment.
      </div>
      <main class="columns">
        <section class="chat">
          <ol class="messages" data-role="messages"></ol>
          <div class="chips" data-role="chips"></div>
          <form data-role="form">
            <input type="text" data-role="query" placeholder="Ask about the domain ('exit' ends the session)" autocomplete="off"/>
            <button type="submit" data-role="send">Send</button>
          </form>
        </section>
        <aside class="radar" data-role="radar"></aside>
      </main>
    </div>`;

  const form = root.querySelector<HTMLFormElement>('[data-role="form"]')!;
  const input = root.querySelector<HTMLInputElement>('[data-role="query"]')!;
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const query = input.value;
    input.value = "";
    void store.submitTurn(query);
  });

  store.subscribe((view) => render(root, view, store));
  render(root, store.view, store);
}

function render(root: HTMLElement, view: SessionView, store: SessionStore): void {
  const error = root.querySelector<HTMLElement>('[data-role="error"]')!;
  error.hidden = view.errorBanner === null;
  error.textContent = view.errorBanner ?? "";

  const busy = root.querySelector<HTMLElement>('[data-role="busy"]')!;
  busy.hidden = !view.busyNotice;

  const messages = root.querySelector<HTMLOListElement>('[data-role="messages"]')!;
  messages.innerHTML = "";
  for (const message of view.messages) {
    const li = document.createElement("li");
    li.className = `message message-${message.role}`;
    li.textContent = message.text;
    messages.appendChild(li);
  }

  const chips = root.querySelector<HTMLElement>('[data-role="chips"]')!;
  chips.innerHTML = "";
  view.chips.forEach((chip, index) => {
    const button = document.createElement("button");
    button.type = "button";
    button.className = `chip chip-${chip.branch}`;
    button.dataset.chipIndex = String(index);
    const badge = chip.branch === "low" ? "foundational" : "application";
    button.innerHTML =
      `<span class="chip-text"></span>` +
      `<span class="chip-quality">${chip.quality.toFixed(2)}</span>` +
      `<span class="chip-branch">${badge}</span>`;
    button.querySelector<HTMLElement>(".chip-text")!.textContent = chip.text;
    button.addEventListener("click", () => void store.clickChip(index));
    button.disabled = view.inputDisabled || view.inFlight;
    chips.appendChild(button);
  });

  const input = root.querySelector<HTMLInputElement>('[data-role="query"]')!;
  const send = root.querySelector<HTMLButtonElement>('[data-role="send"]')!;
  input.disabled = view.inputDisabled || view.inFlight;
  send.disabled = view.inputDisabled || view.inFlight;

  const radar = root.querySelector<HTMLElement>('[data-role="radar"]')!;
  radar.innerHTML = radarSvg(radarGeometry({
    concepts: view.radar.concepts,
    theta: view.radar.theta,
    previous: view.radar.previous,
    epsilonLow: view.radar.epsilonLow,
  }));
}
